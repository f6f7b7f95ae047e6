//! Plots built from the CSV files written by `run` and `converge`.

use std::path::Path;

use frg_core::assembly::{DensityState, Discretization};
use frg_core::metrics::parse_num;
use frg_core::mesh::{Mesh, MeshSpec};

use crate::config::ExperimentConfig;
use crate::svg::{LinePlot, Series};
use crate::CliError;

const PROFILE_POINTS_PER_CELL: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Profile,
    ProfileLog,
    ErrorTime,
    Convergence,
}

impl std::str::FromStr for PlotKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "profile" => Ok(PlotKind::Profile),
            "profile_log" => Ok(PlotKind::ProfileLog),
            "error_time" => Ok(PlotKind::ErrorTime),
            "convergence" => Ok(PlotKind::Convergence),
            other => Err(CliError::Config(format!("unknown plot kind '{other}'"))),
        }
    }
}

/// Density along `x` in 1D, or along the slice `y = 1/2` in 2D.
pub fn profile_points(disc: &Discretization, r: &DensityState) -> Vec<(f64, f64)> {
    let mesh = disc.mesh();
    let m = mesh.cells_per_axis();
    let n = PROFILE_POINTS_PER_CELL;
    let mut pts = Vec::with_capacity(m * n);
    for i in 0..m {
        for k in 0..n {
            let xi = k as f64 / (n - 1) as f64;
            let (cell, local) = if mesh.dim() == 1 {
                (i, [xi, 0.0])
            } else {
                let row = (m / 2).min(m - 1);
                let ly = 0.5 * m as f64 - row as f64;
                (mesh.cell_index([i, row]), [xi, ly])
            };
            pts.push(((i as f64 + xi) / m as f64, disc.eval_local(r, cell, local)));
        }
    }
    pts
}

fn err(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

fn read_rows(text: &str, expected: &[&str]) -> Result<Vec<csv::StringRecord>, CliError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| err(e.to_string()))?.clone();
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(err(format!("unexpected columns {got:?}, expected {expected:?}")));
    }
    rdr.records().map(|r| r.map_err(|e| err(e.to_string()))).collect()
}

fn num(rec: &csv::StringRecord, i: usize) -> Result<f64, CliError> {
    let s = rec.get(i).unwrap_or("");
    parse_num(s).ok_or_else(|| err(format!("not a number: '{s}'")))
}

/// Samples of a `trajectory.csv`: time, cell count, basis size and
/// coefficient vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryData {
    pub n_cells: usize,
    pub n_basis: usize,
    pub samples: Vec<(f64, Vec<f64>)>,
}

pub fn read_trajectory(text: &str) -> Result<TrajectoryData, CliError> {
    let rows = read_rows(text, &["t", "cell", "node", "coeff"])?;
    let mut n_cells = 0;
    let mut n_basis = 0;
    let mut parsed = Vec::with_capacity(rows.len());
    for r in &rows {
        let cell = num(r, 1)? as usize;
        let node = num(r, 2)? as usize;
        n_cells = n_cells.max(cell + 1);
        n_basis = n_basis.max(node + 1);
        parsed.push((num(r, 0)?, cell, node, num(r, 3)?));
    }
    let mut samples: Vec<(f64, Vec<f64>)> = Vec::new();
    for (t, cell, node, v) in parsed {
        if samples.last().map(|s| s.0) != Some(t) {
            samples.push((t, vec![f64::NAN; n_cells * n_basis]));
        }
        samples.last_mut().unwrap().1[cell * n_basis + node] = v;
    }
    if samples.is_empty() {
        return Err(err("trajectory has no samples"));
    }
    if samples.iter().any(|s| s.1.iter().any(|v| v.is_nan())) {
        return Err(err("trajectory sample is incomplete"));
    }
    Ok(TrajectoryData { n_cells, n_basis, samples })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub scheme: String,
    pub m: usize,
    pub h: f64,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub kl: Option<f64>,
}

pub fn read_table(text: &str) -> Result<Vec<TableRow>, CliError> {
    let with = ["scheme", "m", "h", "mean_L1", "order_L1", "mean_L2", "order_L2", "mean_KL", "order_KL", "status"];
    let without = ["scheme", "m", "h", "mean_L1", "mean_L2", "mean_KL", "status"];
    let (rows, idx) = match read_rows(text, &with) {
        Ok(r) => (r, [3, 5, 7]),
        Err(_) => (read_rows(text, &without)?, [3, 4, 5]),
    };
    let opt = |r: &csv::StringRecord, i: usize| r.get(i).and_then(parse_num);
    rows.iter()
        .map(|r| {
            Ok(TableRow {
                scheme: r.get(0).unwrap_or("").to_string(),
                m: num(r, 1)? as usize,
                h: num(r, 2)?,
                l1: opt(r, idx[0]),
                l2: opt(r, idx[1]),
                kl: opt(r, idx[2]),
            })
        })
        .collect()
}

fn metric_column(metric: &str) -> Result<usize, CliError> {
    match metric {
        "L1" => Ok(1),
        "L2" => Ok(2),
        "KL" => Ok(3),
        "mass" => Ok(4),
        "min_density" => Ok(5),
        other => Err(CliError::Config(format!("unknown metric '{other}'"))),
    }
}

pub fn profile_svg(title: &str, series: Vec<(String, Vec<(f64, f64)>)>, log: bool) -> Result<String, CliError> {
    let plot = LinePlot {
        title: title.to_string(),
        x_label: "x".into(),
        y_label: if log { "density (log scale)".into() } else { "density".into() },
        log_x: false,
        log_y: log,
        series: series.into_iter().map(|(label, points)| Series { label, points, markers: false }).collect(),
    };
    plot.render().map_err(err)
}

pub fn convergence_svg(rows: &[TableRow], metric: &str) -> Result<String, CliError> {
    let mut schemes: Vec<&str> = Vec::new();
    for r in rows {
        if !schemes.contains(&r.scheme.as_str()) {
            schemes.push(&r.scheme);
        }
    }
    let pick = |r: &TableRow| match metric {
        "L1" => Ok(r.l1),
        "L2" => Ok(r.l2),
        "KL" => Ok(r.kl),
        other => Err(CliError::Config(format!("unknown metric '{other}'"))),
    };
    let mut series = Vec::new();
    for s in schemes {
        let mut points = Vec::new();
        for r in rows.iter().filter(|r| r.scheme == s) {
            points.push((r.h, pick(r)?.unwrap_or(f64::NAN)));
        }
        series.push(Series { label: s.to_string(), points, markers: true });
    }
    let plot = LinePlot {
        title: format!("mean {metric} error under refinement"),
        x_label: "h".into(),
        y_label: format!("mean {metric} error"),
        log_x: true,
        log_y: true,
        series,
    };
    plot.render().map_err(err)
}

/// Configuration stored next to a CSV file, if any.
fn sibling_config(path: &Path) -> Option<ExperimentConfig> {
    let meta = path.parent()?.join("meta.txt");
    ExperimentConfig::load(&meta).ok()
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Options of the `plot` subcommand.
#[derive(Debug, Clone)]
pub struct PlotRequest {
    pub kind: PlotKind,
    pub inputs: Vec<std::path::PathBuf>,
    pub labels: Vec<String>,
    /// Sample time for profiles; the last sample when absent.
    pub time: Option<f64>,
    pub metric: String,
}

pub fn render(req: &PlotRequest) -> Result<String, CliError> {
    if req.inputs.is_empty() {
        return Err(err("no input files"));
    }
    let label = |i: usize, path: &Path| -> String {
        if let Some(l) = req.labels.get(i) {
            return l.clone();
        }
        sibling_config(path).map(|c| c.scheme.to_string()).unwrap_or_else(|| path.display().to_string())
    };
    match req.kind {
        PlotKind::Profile | PlotKind::ProfileLog => {
            let mut series = Vec::new();
            let mut title = String::from("density profile");
            for (i, path) in req.inputs.iter().enumerate() {
                let data = read_trajectory(&read(path)?)?;
                let cfg = sibling_config(path);
                let dim = match &cfg {
                    Some(c) => c.problem_def()?.dim,
                    None => 1,
                };
                let per_axis = if dim == 1 { data.n_cells } else { (data.n_cells as f64).sqrt().round() as usize };
                let order = if dim == 1 { data.n_basis - 1 } else { (data.n_basis as f64).sqrt().round() as usize - 1 };
                let mesh = Mesh::new(MeshSpec::new(dim, per_axis))?;
                if mesh.n_cells() != data.n_cells || (order + 1).pow(dim as u32) != data.n_basis {
                    return Err(err("trajectory layout does not match its metadata"));
                }
                let nq = cfg.as_ref().map_or(order + 2, |c| c.quadrature_points).max(2);
                let disc = Discretization::new(mesh, order, nq)?;
                let sample = match req.time {
                    Some(t) => data
                        .samples
                        .iter()
                        .min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()))
                        .unwrap(),
                    None => data.samples.last().unwrap(),
                };
                let state = DensityState::new(sample.1.clone(), data.n_basis);
                if let Some(c) = &cfg {
                    title = format!("{} at t = {}", c.name, sample.0);
                }
                series.push((label(i, path), profile_points(&disc, &state)));
            }
            profile_svg(&title, series, req.kind == PlotKind::ProfileLog)
        }
        PlotKind::ErrorTime => {
            let col = metric_column(&req.metric)?;
            let mut series = Vec::new();
            for (i, path) in req.inputs.iter().enumerate() {
                let rows = read_rows(&read(path)?, &["t", "L1", "L2", "KL", "mass", "min_density", "limiter_activations"])?;
                let points = rows.iter().map(|r| Ok((num(r, 0)?, num(r, col)?))).collect::<Result<Vec<_>, CliError>>()?;
                series.push(Series { label: label(i, path), points, markers: false });
            }
            let log = matches!(req.metric.as_str(), "L1" | "L2" | "KL");
            let plot = LinePlot {
                title: format!("{} over time", req.metric),
                x_label: "t".into(),
                y_label: req.metric.clone(),
                log_x: false,
                log_y: log,
                series,
            };
            plot.render().map_err(err)
        }
        PlotKind::Convergence => {
            let mut rows = Vec::new();
            for path in &req.inputs {
                rows.extend(read_table(&read(path)?)?);
            }
            convergence_svg(&rows, &req.metric)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_round_trip() {
        let text = "t,cell,node,coeff\n0,0,0,1e0\n0,0,1,2e0\n0,1,0,3e0\n0,1,1,4e0\n0.5,0,0,1e0\n0.5,0,1,1e0\n0.5,1,0,1e0\n0.5,1,1,1e0\n";
        let d = read_trajectory(text).unwrap();
        assert_eq!((d.n_cells, d.n_basis), (2, 2));
        assert_eq!(d.samples[0].1, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(d.samples[1].0, 0.5);
    }

    #[test]
    fn schema_mismatch_is_rejected() {
        assert!(matches!(read_trajectory("t,cell,value\n0,0,1\n"), Err(CliError::Schema(_))));
        assert!(matches!(read_table("a,b\n1,2\n"), Err(CliError::Schema(_))));
    }

    #[test]
    fn table_with_infinite_kl() {
        let text = "scheme,m,h,mean_L1,mean_L2,mean_KL,status\ndg,64,1.5625e-2,1e-3,2e-3,inf,ok\n";
        let rows = read_table(text).unwrap();
        assert_eq!(rows[0].kl, Some(f64::INFINITY));
        assert!(convergence_svg(&rows, "L2").is_ok());
    }

    #[test]
    fn constant_profile() {
        let disc = Discretization::new(Mesh::new(MeshSpec::new(2, 4)).unwrap(), 1, 3).unwrap();
        let r = disc.interpolate(|_| 0.7);
        let pts = profile_points(&disc, &r);
        assert_eq!(pts.len(), 4 * PROFILE_POINTS_PER_CELL);
        assert!(pts.iter().all(|p| (p.1 - 0.7).abs() < 1e-14));
    }
}
