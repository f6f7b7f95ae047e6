//! Minimal self-contained SVG line plots.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub markers: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64, log: bool) -> String {
    if log {
        format!("1e{}", v.round() as i64)
    } else if v == 0.0 || (v.abs() >= 1e-3 && v.abs() < 1e4) {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

fn nice_ticks(lo: f64, hi: f64, log: bool) -> Vec<f64> {
    if log {
        let (a, b) = (lo.floor() as i64, hi.ceil() as i64);
        let step = ((b - a) / 8).max(1);
        return (a..=b).step_by(step as usize).map(|v| v as f64).filter(|v| *v >= lo - 1e-9 && *v <= hi + 1e-9).collect();
    }
    let span = hi - lo;
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() * step;
    let mut ticks = Vec::new();
    let mut t = start;
    while t <= hi + 1e-9 * span {
        ticks.push(if t.abs() < 1e-12 * span { 0.0 } else { t });
        t += step;
    }
    ticks
}

impl LinePlot {
    /// Renders the plot. Points that are not finite, or not positive on a
    /// log axis, are dropped and break the line.
    pub fn render(&self) -> Result<String, String> {
        if self.series.is_empty() {
            return Err("nothing to plot: no series".into());
        }
        let tx = |v: f64| if self.log_x { (v > 0.0).then(|| v.log10()) } else { Some(v) };
        let ty = |v: f64| if self.log_y { (v > 0.0).then(|| v.log10()) } else { Some(v) };
        let mapped: Vec<Vec<Option<(f64, f64)>>> = self
            .series
            .iter()
            .map(|s| {
                s.points
                    .iter()
                    .map(|&(x, y)| match (x.is_finite() && y.is_finite(), tx(x), ty(y)) {
                        (true, Some(a), Some(b)) => Some((a, b)),
                        _ => None,
                    })
                    .collect()
            })
            .collect();
        let all: Vec<(f64, f64)> = mapped.iter().flatten().flatten().copied().collect();
        if all.is_empty() {
            return Err("nothing to plot: no finite points".into());
        }
        let (mut x0, mut x1) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
        let (mut y0, mut y1) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
        if x1 - x0 <= 0.0 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 <= 1e-12 * y1.abs().max(1.0) {
            let pad = if self.log_y { 0.5 } else { 0.5 * y0.abs().max(1.0) };
            y0 -= pad;
            y1 += pad;
        } else {
            let pad = 0.05 * (y1 - y0);
            y0 -= pad;
            y1 += pad;
        }
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let py = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, LEFT + pw / 2.0, escape(&self.title));
        let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        for t in nice_ticks(x0, x1, self.log_x) {
            let x = px(t);
            let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{}" stroke="#ddd"/>"##, TOP + ph);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, TOP + ph + 16.0, tick_label(t, self.log_x));
        }
        for t in nice_ticks(y0, y1, self.log_y) {
            let y = py(t);
            let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/>"##, LEFT + pw);
            let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, tick_label(t, self.log_y));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, HEIGHT - 18.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="18" y="{y}" text-anchor="middle" transform="rotate(-90 18 {y})">{}</text>"#,
            escape(&self.y_label),
            y = TOP + ph / 2.0
        );
        for (k, (series, pts)) in self.series.iter().zip(&mapped).enumerate() {
            let color = COLORS[k % COLORS.len()];
            let mut d = String::new();
            let mut pen_up = true;
            for p in pts {
                match p {
                    Some((x, y)) => {
                        let _ = write!(d, "{}{:.2},{:.2} ", if pen_up { "M" } else { "L" }, px(*x), py(*y));
                        pen_up = false;
                    }
                    None => pen_up = true,
                }
            }
            let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, d.trim_end());
            if series.markers {
                for (x, y) in pts.iter().flatten() {
                    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, px(*x), py(*y));
                }
            }
            let ly = TOP + 14.0 + 18.0 * k as f64;
            let lx = LEFT + pw + 12.0;
            let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 22.0);
            let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 28.0, ly + 4.0, escape(&series.label));
        }
        s.push_str("</svg>\n");
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plot(series: Vec<Series>, log_y: bool) -> LinePlot {
        LinePlot { title: "t".into(), x_label: "x".into(), y_label: "y".into(), log_x: false, log_y, series }
    }

    #[test]
    fn empty_plot_is_an_error() {
        assert!(plot(vec![], false).render().is_err());
    }

    #[test]
    fn constant_series_is_a_horizontal_path() {
        let s = Series { label: "dg".into(), points: (0..5).map(|i| (i as f64 / 4.0, 2.0)).collect(), markers: false };
        let svg = plot(vec![s], false).render().unwrap();
        let path = svg.lines().find(|l| l.starts_with("<path")).unwrap();
        let ys: Vec<&str> = path.split(['M', 'L']).skip(1).map(|p| p.trim().split(',').nth(1).unwrap().trim_end_matches('"')).collect();
        assert_eq!(ys.len(), 5);
        assert!(ys.iter().all(|y| y.split('"').next() == ys[0].split('"').next()));
        assert!(svg.contains(">dg<"));
    }

    #[test]
    fn log_axis_breaks_at_nonpositive_values() {
        let s = Series { label: "a".into(), points: vec![(0.0, 1.0), (1.0, -1.0), (2.0, 10.0), (3.0, 100.0)], markers: false };
        let svg = plot(vec![s], true).render().unwrap();
        let path = svg.lines().find(|l| l.starts_with("<path")).unwrap();
        assert_eq!(path.matches('M').count(), 2);
    }
}
