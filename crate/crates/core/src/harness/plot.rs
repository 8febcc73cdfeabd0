//! Static SVG plots from a run directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fieldio::{read_complex_record, read_doubles, read_manifest, read_real_record, FieldManifest};
use crate::grid::{Grid, GridSpec};

use super::run::RunManifest;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;
/// Heatmap resolution cap per axis.
const MAX_CELLS: usize = 128;
/// Points per drawn path.
const MAX_PATH_POINTS: usize = 200;

/// Files written and plots skipped, with the reason.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlotReport {
    pub written: Vec<PathBuf>,
    pub skipped: Vec<String>,
}

/// Linear map from a data box to the plot area, y pointing up.
#[derive(Debug, Clone, Copy)]
struct Axes {
    x: (f64, f64),
    y: (f64, f64),
}

impl Axes {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }
}

struct Svg {
    body: String,
}

impl Svg {
    fn new(title: &str) -> Self {
        let mut body = String::new();
        let _ = write!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = write!(body, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = write!(body, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
        Self { body }
    }

    fn frame(&mut self, axes: &Axes, xlabel: &str, ylabel: &str) {
        let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
        let _ = write!(self.body, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, r - l, b - t);
        let _ = write!(self.body, r#"<text x="{l}" y="{}" text-anchor="middle">{}</text>"#, b + 16.0, fmt_num(axes.x.0));
        let _ = write!(self.body, r#"<text x="{r}" y="{}" text-anchor="middle">{}</text>"#, b + 16.0, fmt_num(axes.x.1));
        let _ = write!(self.body, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, l - 4.0, b, fmt_num(axes.y.0));
        let _ = write!(self.body, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, l - 4.0, t + 10.0, fmt_num(axes.y.1));
        let _ = write!(self.body, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 12.0, escape(xlabel));
        let _ = write!(
            self.body,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(ylabel)
        );
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = write!(self.body, r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}"/>"#);
    }

    fn polyline(&mut self, class: &str, pts: &[(f64, f64)], stroke: &str, width: f64, dash: bool) {
        if pts.len() < 2 {
            return;
        }
        let mut p = String::new();
        for (x, y) in pts {
            let _ = write!(p, "{x:.2},{y:.2} ");
        }
        let dash = if dash { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = write!(
            self.body,
            r#"<polyline class="{class}" points="{}" fill="none" stroke="{stroke}" stroke-width="{width}"{dash}/>"#,
            p.trim_end()
        );
    }

    fn legend(&mut self, i: usize, label: &str, color: &str) {
        let y = MARGIN + 14.0 + 16.0 * i as f64;
        let x = WIDTH - MARGIN - 140.0;
        let _ = write!(self.body, r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/>"#, x + 20.0);
        let _ = write!(self.body, r#"<text x="{}" y="{}">{}</text>"#, x + 26.0, y + 4.0, escape(label));
    }

    fn write(mut self, path: &Path) -> Result<PathBuf> {
        self.body.push_str("</svg>\n");
        fs::write(path, self.body)?;
        Ok(path.to_path_buf())
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_num(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-2 || x.abs() >= 1e4) {
        format!("{x:.2e}")
    } else {
        format!("{}", (x * 1000.0).round() / 1000.0)
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Viridis-like colour for `s` in [0, 1].
fn colour(s: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] =
        [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (94.0, 201.0, 98.0), (253.0, 231.0, 37.0)];
    let s = s.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (s.floor() as usize).min(STOPS.len() - 2);
    let f = s - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |p: f64, q: f64| (p + f * (q - p)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Sum of `values` over blocks of at most [`MAX_CELLS`] per axis.
fn block_sums(values: &[f64], nx: usize, ny: usize) -> (Vec<f64>, usize, usize) {
    let bx = nx.div_ceil(MAX_CELLS).max(1);
    let by = ny.div_ceil(MAX_CELLS).max(1);
    let (cx, cy) = (nx.div_ceil(bx), ny.div_ceil(by));
    let mut out = vec![0.0; cx * cy];
    for i in 0..nx {
        for j in 0..ny {
            out[(i / bx) * cy + j / by] += values[i * ny + j];
        }
    }
    (out, cx, cy)
}

fn heatmap(svg: &mut Svg, axes: &Axes, cells: &[f64], cx: usize, cy: usize, xr: (f64, f64), yr: (f64, f64)) {
    let peak = cells.iter().cloned().fold(0.0, f64::max);
    let (w, h) = ((xr.1 - xr.0) / cx as f64, (yr.1 - yr.0) / cy as f64);
    for i in 0..cx {
        for j in 0..cy {
            let v = cells[i * cy + j];
            if peak <= 0.0 || v <= 1e-4 * peak {
                continue;
            }
            let (x0, y1) = (xr.0 + i as f64 * w, yr.0 + (j + 1) as f64 * h);
            let px = axes.px(x0);
            let py = axes.py(y1);
            svg.rect(px, py, axes.px(x0 + w) - px, axes.py(y1 - h) - py, &colour((v / peak).sqrt()));
        }
    }
}

struct Paths {
    dim: usize,
    times: Vec<f64>,
    /// `paths × frames × dim`.
    values: Vec<f64>,
    count: usize,
}

impl Paths {
    fn read(dir: &Path) -> Result<Option<Self>> {
        let header = dir.join("paths.json");
        if !header.is_file() {
            return Ok(None);
        }
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&header)?)?;
        let bad = |m: &str| Error::Format { path: header.clone(), message: m.into() };
        let count = v["paths"].as_u64().ok_or_else(|| bad("missing paths"))? as usize;
        let frames = v["frames"].as_u64().ok_or_else(|| bad("missing frames"))? as usize;
        let dim = v["dim"].as_u64().ok_or_else(|| bad("missing dim"))? as usize;
        let times: Vec<f64> = serde_json::from_value(v["times"].clone())?;
        let values = read_doubles(&dir.join("paths.bin"), count * frames * dim)?;
        Ok(Some(Self { dim, times, values, count }))
    }

    fn at(&self, p: usize, i: usize, k: usize) -> f64 {
        self.values[(p * self.times.len() + i) * self.dim + k]
    }

    /// Path `p` up to frame `last`, mapped by `f(frame, position)`.
    fn polyline(&self, p: usize, last: usize, mut f: impl FnMut(usize, &[f64]) -> (f64, f64)) -> Vec<(f64, f64)> {
        let step = (last + 1).div_ceil(MAX_PATH_POINTS).max(1);
        let mut q = vec![0.0; self.dim];
        let mut frames: Vec<usize> = (0..=last).step_by(step).collect();
        if frames.last() != Some(&last) {
            frames.push(last);
        }
        frames
            .into_iter()
            .filter_map(|i| {
                for (k, x) in q.iter_mut().enumerate() {
                    *x = self.at(p, i, k);
                }
                q.iter().all(|x| x.is_finite()).then(|| f(i, &q))
            })
            .collect()
    }
}

fn axis_range(spec: &GridSpec, k: usize) -> (f64, f64) {
    (spec.axes[k].lower, spec.axes[k].upper)
}

fn density_1d(frames_dir: &Path, m: &FieldManifest, paths: Option<&Paths>, out: &Path) -> Result<PathBuf> {
    let nx = m.grid.axes[0].points;
    let nt = m.times.len();
    let mut rho = vec![0.0; nx * nt];
    for (r, _) in m.times.iter().enumerate() {
        for (j, z) in read_complex_record(frames_dir, m, r)?.iter().enumerate() {
            rho[j * nt + r] = z.norm_sqr();
        }
    }
    let (t0, t1) = (m.times[0], *m.times.last().expect("frames present"));
    let xr = axis_range(&m.grid, 0);
    let axes = Axes { x: xr, y: (t0, if t1 > t0 { t1 } else { t0 + 1.0 }) };
    let mut svg = Svg::new("|psi|^2 over time with trajectories");
    // rows are frame times; each row spans to the next frame time
    let (cells, cx, _) = block_sums(&rho, nx, nt);
    let peak = cells.iter().cloned().fold(0.0, f64::max);
    let bx = nx.div_ceil(MAX_CELLS).max(1);
    let w = (xr.1 - xr.0) / cx as f64;
    for r in 0..nt {
        let (ta, tb) = (m.times[r], m.times.get(r + 1).copied().unwrap_or(axes.y.1));
        for i in 0..cx {
            let v: f64 = (i * bx..((i + 1) * bx).min(nx)).map(|j| rho[j * nt + r]).sum();
            if peak <= 0.0 || v <= 1e-4 * peak {
                continue;
            }
            let px = axes.px(xr.0 + i as f64 * w);
            let py = axes.py(tb);
            svg.rect(px, py, axes.px(xr.0 + (i + 1) as f64 * w) - px, axes.py(ta) - py, &colour((v / peak).sqrt()));
        }
    }
    if let Some(p) = paths {
        let last = p.times.len() - 1;
        for k in 0..p.count {
            let pts = p.polyline(k, last, |i, q| (axes.px(q[0]), axes.py(p.times[i])));
            svg.polyline("path", &pts, "white", 0.8, false);
        }
    }
    svg.frame(&axes, "x", "t");
    svg.write(out)
}

fn density_2d(frames_dir: &Path, m: &FieldManifest, r: usize, paths: Option<&Paths>, out: &Path) -> Result<PathBuf> {
    let grid = Grid::new(m.grid.clone())?;
    let (nx, ny) = (grid.points(0), grid.points(1));
    let amps = read_complex_record(frames_dir, m, r)?;
    // marginal over any axes beyond the first two
    let rest = grid.len() / (nx * ny);
    let mut rho = vec![0.0; nx * ny];
    for (flat, z) in amps.iter().enumerate() {
        rho[flat / rest] += z.norm_sqr();
    }
    let (xr, yr) = (axis_range(&m.grid, 0), axis_range(&m.grid, 1));
    let axes = Axes { x: xr, y: yr };
    let t = m.times[r];
    let mut svg = Svg::new(&format!("|psi|^2 at t = {} with trajectories", fmt_num(t)));
    let (cells, cx, cy) = block_sums(&rho, nx, ny);
    heatmap(&mut svg, &axes, &cells, cx, cy, xr, yr);
    if let Some(p) = paths {
        let last = p.times.iter().position(|s| (s - t).abs() <= 1e-9 * t.abs().max(1.0)).unwrap_or(p.times.len() - 1);
        for k in 0..p.count {
            let pts = p.polyline(k, last, |_, q| (axes.px(q[0]), axes.py(q[1])));
            svg.polyline("path", &pts, "white", 0.8, false);
        }
    }
    svg.frame(&axes, "q0", "q1");
    svg.write(out)
}

fn ks_curve(run_dir: &Path, out: &Path) -> Result<Option<PathBuf>> {
    let path = run_dir.join("equivariance.json");
    if !path.is_file() {
        return Ok(None);
    }
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path)?)?;
    let cps = v["checkpoints"].as_array().cloned().unwrap_or_default();
    let bad = || Error::Format { path: path.clone(), message: "malformed checkpoints".into() };
    let mut series: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut tol = Vec::new();
    for c in &cps {
        let t = c["time"].as_f64().ok_or_else(bad)?;
        let ks = c["ks"].as_array().ok_or_else(bad)?;
        for (k, d) in ks.iter().enumerate() {
            if series.len() <= k {
                series.push(Vec::new());
            }
            series[k].push((t, d.as_f64().ok_or_else(bad)?));
        }
        tol.push((t, c["ks_tolerance"].as_f64().ok_or_else(bad)?));
    }
    let tmin = tol.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let tmax = tol.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let ymax = series.iter().flatten().chain(&tol).map(|p| p.1).fold(0.0, f64::max) * 1.2;
    let axes = Axes { x: (tmin, if tmax > tmin { tmax } else { tmin + 1.0 }), y: (0.0, if ymax > 0.0 { ymax } else { 1.0 }) };
    let mut svg = Svg::new("Marginal KS statistic against |psi_t|^2");
    let map = |pts: &[(f64, f64)]| pts.iter().map(|(t, d)| (axes.px(*t), axes.py(*d))).collect::<Vec<_>>();
    for (k, s) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        svg.polyline("ks", &map(s), colour, 1.5, false);
        svg.legend(k, &format!("axis {k}"), colour);
    }
    svg.polyline("tolerance", &map(&tol), "black", 1.0, true);
    svg.legend(series.len(), "tolerance", "black");
    svg.frame(&axes, "t", "KS");
    Ok(Some(svg.write(out)?))
}

fn quantum_potential(run_dir: &Path, out: &Path) -> Result<Option<PathBuf>> {
    let root = run_dir.join("polar");
    if !root.is_dir() {
        return Ok(None);
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(&root)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    dirs.sort();
    let mut curves = Vec::new();
    let mut xr = (0.0, 1.0);
    for d in &dirs {
        let m = read_manifest(d)?;
        let grid = Grid::new(m.grid.clone())?;
        let fields = read_real_record(d, &m, 0)?;
        let u = &fields[2];
        // profile along axis 0 through the middle of the other axes
        let mut idx: Vec<usize> = (0..grid.dim()).map(|k| grid.points(k) / 2).collect();
        let pts: Vec<(f64, f64)> = (0..grid.points(0))
            .map(|i| {
                idx[0] = i;
                (grid.coords(0)[i], u[grid.flatten(&idx)])
            })
            .collect();
        xr = axis_range(&m.grid, 0);
        curves.push((m.times[0], pts));
    }
    // robust range: nodes make U diverge
    let mut ys: Vec<f64> = curves.iter().flat_map(|c| c.1.iter().map(|p| p.1)).filter(|y| y.is_finite()).collect();
    if ys.is_empty() {
        return Ok(None);
    }
    ys.sort_by(f64::total_cmp);
    let (lo, hi) = (ys[ys.len() / 50], ys[ys.len() - 1 - ys.len() / 50]);
    let pad = 0.1 * (hi - lo).max(1e-6);
    let axes = Axes { x: xr, y: (lo - pad, hi + pad) };
    let mut svg = Svg::new("Quantum potential U along axis 0");
    for (n, (t, pts)) in curves.iter().enumerate() {
        let colour = PALETTE[n % PALETTE.len()];
        let mut seg = Vec::new();
        for (x, y) in pts {
            if y.is_finite() && *y >= axes.y.0 && *y <= axes.y.1 {
                seg.push((axes.px(*x), axes.py(*y)));
            } else {
                svg.polyline("u", &seg, colour, 1.5, false);
                seg.clear();
            }
        }
        svg.polyline("u", &seg, colour, 1.5, false);
        svg.legend(n, &format!("t = {}", fmt_num(*t)), colour);
    }
    svg.frame(&axes, "x", "U");
    Ok(Some(svg.write(out)?))
}

fn classical_limit(run_dir: &Path, out: &Path) -> Result<Option<PathBuf>> {
    let path = run_dir.join("classical_limit.json");
    if !path.is_file() {
        return Ok(None);
    }
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path)?)?;
    let bad = || Error::Format { path: path.clone(), message: "malformed rows".into() };
    let mut pts = Vec::new();
    for row in v["rows"].as_array().ok_or_else(bad)? {
        let (s, d) = (row["scale"].as_f64().ok_or_else(bad)?, row["max_deviation"].as_f64().ok_or_else(bad)?);
        if s > 0.0 && d > 0.0 {
            pts.push((s.log10(), d.log10()));
        }
    }
    if pts.is_empty() {
        return Ok(None);
    }
    let span = |f: fn(&(f64, f64)) -> f64| {
        let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min).floor();
        let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max).ceil();
        (lo, if hi > lo { hi } else { lo + 1.0 })
    };
    let axes = Axes { x: span(|p| p.0), y: span(|p| p.1) };
    let mut svg = Svg::new("Bohmian against Newtonian centre path");
    let mapped: Vec<(f64, f64)> = pts.iter().map(|(x, y)| (axes.px(*x), axes.py(*y))).collect();
    svg.polyline("deviation", &mapped, PALETTE[0], 1.5, false);
    svg.frame(&axes, "log10 mass scale", "log10 max deviation");
    Ok(Some(svg.write(out)?))
}

/// Write density/trajectory, KS and quantum-potential plots into
/// `<run_dir>/plots`. Plots whose analysis was not run are skipped.
pub fn export_plots(run_dir: &Path) -> Result<PlotReport> {
    let manifest = RunManifest::read(run_dir)?;
    let frames_dir = run_dir.join("frames");
    let frames_manifest = frames_dir.join(crate::fieldio::MANIFEST_FILE);
    let has_frames = manifest.artifacts.keys().any(|k| k.starts_with("frames/"));
    if has_frames && !frames_manifest.is_file() {
        return Err(Error::MissingArtifact(frames_manifest));
    }
    let out = run_dir.join("plots");
    fs::create_dir_all(&out)?;
    let mut report = PlotReport::default();
    if has_frames {
        let m = read_manifest(&frames_dir)?;
        let paths = Paths::read(&run_dir.join("paths"))?;
        if m.grid.axes.len() == 1 {
            report.written.push(density_1d(&frames_dir, &m, paths.as_ref(), &out.join("density.svg"))?);
        } else {
            for r in 0..m.times.len() {
                let name = format!("density-{r:03}.svg");
                report.written.push(density_2d(&frames_dir, &m, r, paths.as_ref(), &out.join(name))?);
            }
        }
    } else {
        report.skipped.push("density: run stored no wave-function frames".into());
    }
    match ks_curve(run_dir, &out.join("ks.svg"))? {
        Some(p) => report.written.push(p),
        None => report.skipped.push("ks.svg: run has no equivariance analysis".into()),
    }
    match quantum_potential(run_dir, &out.join("quantum_potential.svg"))? {
        Some(p) => report.written.push(p),
        None => report.skipped.push("quantum_potential.svg: run has no polar analysis".into()),
    }
    if let Some(p) = classical_limit(run_dir, &out.join("classical_limit.svg"))? {
        report.written.push(p);
    }
    Ok(report)
}
