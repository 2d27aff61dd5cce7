//! Standalone SVG plots rendered from result tables.
//!
//! Plots are pure functions of the CSV contents. Before drawing, each plot
//! checks the monotonicity the engine guarantees for its table, so a
//! corrupted or hand-edited CSV is reported rather than drawn.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::CliError;
use crate::table::{CurveRow, ResultTable, Schema, SnapshotRow, SolveRow};

/// Rows grouped by line key within one panel.
type Series<'a, K, R> = BTreeMap<K, Vec<&'a R>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    /// `p̂` against `ε`, one line per (n, α), one panel per σ.
    Curve,
    /// Solved `ε` against `n`, one line per (α, p).
    Series,
    /// Contours of `ε(α, p)`, one panel per n.
    Contour,
    /// Posterior densities (or CDFs) per replicate, one panel per n.
    Snapshots,
}

impl PlotKind {
    pub fn schema(self) -> Schema {
        match self {
            PlotKind::Curve => Schema::Curve,
            PlotKind::Series | PlotKind::Contour => Schema::Solve,
            PlotKind::Snapshots => Schema::Snapshots,
        }
    }
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 280.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 70.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn key(x: f64) -> u64 {
    // total order on the bits of non-negative-or-negative finite reals
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

fn label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let mag = v.abs();
    if !(1e-3..1e5).contains(&mag) {
        return format!("{v:.1e}");
    }
    let s = format!("{v:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(lo: f64, hi: f64, log: bool) -> Axis {
        let (lo, hi) = if log { (lo.log10(), hi.log10()) } else { (lo, hi) };
        let (lo, hi) = if hi > lo {
            (lo, hi)
        } else {
            let pad = if lo == 0.0 { 0.5 } else { 0.1 * lo.abs() };
            (lo - pad, hi + pad)
        };
        Axis { lo, hi, log }
    }

    fn frac(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (self.lo.ceil() as i32, self.hi.floor() as i32);
            if b >= a {
                return (a..=b).map(|e| 10f64.powi(e)).collect();
            }
        }
        (0..=4)
            .map(|i| {
                let t = self.lo + (self.hi - self.lo) * i as f64 / 4.0;
                if self.log {
                    10f64.powf(t)
                } else {
                    t
                }
            })
            .collect()
    }
}

struct Panel {
    title: String,
    x_label: String,
    y_label: String,
    x: Axis,
    y: Axis,
    body: String,
    legend: Vec<(String, &'static str)>,
}

impl Panel {
    fn new(title: String, x_label: &str, y_label: &str, x: Axis, y: Axis) -> Panel {
        Panel {
            title,
            x_label: x_label.into(),
            y_label: y_label.into(),
            x,
            y,
            body: String::new(),
            legend: Vec::new(),
        }
    }

    fn px(&self, v: f64) -> f64 {
        self.x.frac(v) * PANEL_W
    }

    fn py(&self, v: f64) -> f64 {
        (1.0 - self.y.frac(v)) * PANEL_H
    }

    fn line(&mut self, pts: &[(f64, f64)], color: &str, markers: bool) {
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect();
        if pts.len() > 1 {
            let _ = writeln!(
                self.body,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                coords.join(" ")
            );
        }
        if markers || pts.len() == 1 {
            for &(x, y) in pts {
                let _ = writeln!(
                    self.body,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                    self.px(x),
                    self.py(y)
                );
            }
        }
    }

    fn segment(&mut self, a: (f64, f64), b: (f64, f64), color: &str) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1.2"/>"#,
            self.px(a.0),
            self.py(a.1),
            self.px(b.0),
            self.py(b.1)
        );
    }

    fn text(&mut self, at: (f64, f64), s: &str, color: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" fill="{color}">{}</text>"#,
            self.px(at.0),
            self.py(at.1),
            escape(s)
        );
    }

    fn render(&self, out: &mut String, ox: f64, oy: f64) {
        let _ = writeln!(out, r#"<g transform="translate({ox:.1},{oy:.1})">"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="-14" font-size="13" text-anchor="middle">{}</text>"#,
            PANEL_W / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(out, r#"<clipPath id="clip{ox:.0}_{oy:.0}"><rect width="{PANEL_W}" height="{PANEL_H}"/></clipPath>"#);
        let _ = writeln!(out, r##"<rect width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="#333"/>"##);
        for t in self.x.ticks() {
            let x = self.px(t);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{PANEL_H}" x2="{x:.2}" y2="{:.1}" stroke="#333"/><text x="{x:.2}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"##,
                PANEL_H + 4.0,
                PANEL_H + 16.0,
                label(t)
            );
        }
        for t in self.y.ticks() {
            let y = self.py(t);
            let _ = writeln!(
                out,
                r##"<line x1="-4" y1="{y:.2}" x2="0" y2="{y:.2}" stroke="#333"/><text x="-6" y="{:.2}" font-size="10" text-anchor="end">{}</text>"##,
                y + 3.0,
                label(t)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#,
            PANEL_W / 2.0,
            PANEL_H + 32.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text transform="translate(-44,{:.1}) rotate(-90)" font-size="12" text-anchor="middle">{}</text>"#,
            PANEL_H / 2.0,
            escape(&self.y_label)
        );
        let _ = writeln!(out, r#"<g clip-path="url(#clip{ox:.0}_{oy:.0})">"#);
        out.push_str(&self.body);
        out.push_str("</g>\n");
        for (i, (name, color)) in self.legend.iter().enumerate() {
            let x = (i % 3) as f64 * 120.0;
            let y = PANEL_H + 48.0 + (i / 3) as f64 * 13.0;
            let _ = writeln!(
                out,
                r#"<rect x="{x:.1}" y="{:.1}" width="10" height="3" fill="{color}"/><text x="{:.1}" y="{:.1}" font-size="10">{}</text>"#,
                y - 4.0,
                x + 14.0,
                y,
                escape(name)
            );
        }
        out.push_str("</g>\n");
    }
}

fn document(title: &str, panels: &[Panel]) -> String {
    let cols = panels.len().clamp(1, 3);
    let rows = panels.len().div_ceil(cols).max(1);
    let legend_rows = panels.iter().map(|p| p.legend.len().div_ceil(3)).max().unwrap_or(0) as f64;
    let cell_w = PANEL_W + MARGIN_L + MARGIN_R;
    let cell_h = PANEL_H + MARGIN_T + MARGIN_B + 13.0 * legend_rows;
    let (w, h) = (cell_w * cols as f64, cell_h * rows as f64 + 24.0);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="18" font-size="14" text-anchor="middle">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    for (i, p) in panels.iter().enumerate() {
        let (c, r) = (i % cols, i / cols);
        p.render(&mut out, c as f64 * cell_w + MARGIN_L, 24.0 + r as f64 * cell_h + MARGIN_T);
    }
    out.push_str("</svg>\n");
    out
}

fn schema_error(kind: PlotKind, table: &ResultTable) -> CliError {
    CliError::Config(format!(
        "plot kind {kind:?} needs columns [{}], table has [{}]",
        kind.schema().columns().join(","),
        table.columns().join(",")
    ))
}

fn sigma_title(sigma: Option<f64>) -> String {
    sigma.map(|s| format!(", σ = {}", label(s))).unwrap_or_default()
}

fn plot_curves(rows: &[CurveRow]) -> Result<String, CliError> {
    let model = rows.first().map(|r| r.model.clone()).unwrap_or_default();
    // panel per σ, series per (n, α)
    let mut panels: BTreeMap<Option<u64>, Series<(u32, u64), CurveRow>> = BTreeMap::new();
    for r in rows {
        panels
            .entry(r.sigma.map(key))
            .or_default()
            .entry((r.n, key(r.alpha)))
            .or_default()
            .push(r);
    }
    let (e_lo, e_hi) = rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.epsilon), b.max(r.epsilon)));
    let mut out = Vec::new();
    for series in panels.values() {
        let sigma = series.values().next().and_then(|s| s[0].sigma);
        let mut panel = Panel::new(
            format!("{model}{}", sigma_title(sigma)),
            "ε",
            "p",
            Axis::new(e_lo, e_hi, false),
            Axis::new(0.0, 1.0, false),
        );
        for (i, pts) in series.values().enumerate() {
            let mut pts = pts.clone();
            pts.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
            if let Some(w) = pts.windows(2).find(|w| w[1].p_hat > w[0].p_hat) {
                return Err(CliError::Config(format!(
                    "curve n={} alpha={} is not nonincreasing at epsilon {} -> {}",
                    w[0].n, w[0].alpha, w[0].epsilon, w[1].epsilon
                )));
            }
            let color = PALETTE[i % PALETTE.len()];
            let xy: Vec<(f64, f64)> = pts.iter().map(|r| (r.epsilon, r.p_hat)).collect();
            panel.line(&xy, color, xy.len() < 30);
            panel
                .legend
                .push((format!("n = {}, α = {}", pts[0].n, label(pts[0].alpha)), color));
        }
        out.push(panel);
    }
    Ok(document("sampling probability of a ball belief at most α", &out))
}

fn plot_series(rows: &[SolveRow]) -> Result<String, CliError> {
    let model = rows.first().map(|r| r.model.clone()).unwrap_or_default();
    let mut series: BTreeMap<(u64, u64), Vec<&SolveRow>> = BTreeMap::new();
    for r in rows {
        series.entry((key(r.alpha), key(r.p))).or_default().push(r);
    }
    let (n_lo, n_hi) = rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.n as f64), b.max(r.n as f64)));
    let e_hi = rows.iter().map(|r| r.epsilon_solved).fold(0.0, f64::max);
    let log = n_lo > 0.0 && n_hi / n_lo >= 10.0;
    let mut panel = Panel::new(
        model,
        "n",
        "ε",
        Axis::new(n_lo, n_hi, log),
        Axis::new(0.0, if e_hi > 0.0 { e_hi * 1.05 } else { 1.0 }, false),
    );
    for (i, pts) in series.values().enumerate() {
        let mut pts = pts.clone();
        pts.sort_by_key(|r| r.n);
        let color = PALETTE[i % PALETTE.len()];
        let xy: Vec<(f64, f64)> = pts.iter().map(|r| (r.n as f64, r.epsilon_solved)).collect();
        panel.line(&xy, color, true);
        panel
            .legend
            .push((format!("α = {}, p = {}", label(pts[0].alpha), label(pts[0].p)), color));
    }
    Ok(document("largest ε with sampling probability at least p", &[panel]))
}

/// Segments of the level set `{v = level}` of a grid by marching squares;
/// `v[i][j]` sits at `(xs[i], ys[j])`.
pub fn marching_squares(xs: &[f64], ys: &[f64], v: &[Vec<f64>], level: f64) -> Vec<((f64, f64), (f64, f64))> {
    let mut segs = Vec::new();
    let cross = |pa: (f64, f64), va: f64, pb: (f64, f64), vb: f64| {
        let t = (level - va) / (vb - va);
        (pa.0 + t * (pb.0 - pa.0), pa.1 + t * (pb.1 - pa.1))
    };
    for i in 0..xs.len().saturating_sub(1) {
        for j in 0..ys.len().saturating_sub(1) {
            // corners counter-clockwise from the lower left
            let c = [
                ((xs[i], ys[j]), v[i][j]),
                ((xs[i + 1], ys[j]), v[i + 1][j]),
                ((xs[i + 1], ys[j + 1]), v[i + 1][j + 1]),
                ((xs[i], ys[j + 1]), v[i][j + 1]),
            ];
            let mut pts = Vec::with_capacity(4);
            for e in 0..4 {
                let (pa, va) = c[e];
                let (pb, vb) = c[(e + 1) % 4];
                if (va >= level) != (vb >= level) {
                    pts.push(cross(pa, va, pb, vb));
                }
            }
            match pts.len() {
                2 => segs.push((pts[0], pts[1])),
                4 => {
                    // saddle: pair according to the centre value
                    let centre = c.iter().map(|x| x.1).sum::<f64>() / 4.0;
                    if (centre >= level) == (c[0].1 >= level) {
                        segs.push((pts[0], pts[3]));
                        segs.push((pts[1], pts[2]));
                    } else {
                        segs.push((pts[0], pts[1]));
                        segs.push((pts[2], pts[3]));
                    }
                }
                _ => {}
            }
        }
    }
    segs
}

fn sorted_unique(vals: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = vals.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn plot_contours(rows: &[SolveRow]) -> Result<String, CliError> {
    let model = rows.first().map(|r| r.model.clone()).unwrap_or_default();
    let mut by_n: BTreeMap<u32, Vec<&SolveRow>> = BTreeMap::new();
    for r in rows {
        by_n.entry(r.n).or_default().push(r);
    }
    let mut panels = Vec::new();
    for (n, cells) in by_n {
        let alphas = sorted_unique(cells.iter().map(|r| r.alpha));
        let ps = sorted_unique(cells.iter().map(|r| r.p));
        let mut grid = vec![vec![f64::NAN; ps.len()]; alphas.len()];
        for r in &cells {
            let i = alphas.partition_point(|&a| a < r.alpha);
            let j = ps.partition_point(|&p| p < r.p);
            grid[i][j] = r.epsilon_solved;
        }
        if grid.iter().flatten().any(|v| v.is_nan()) {
            return Err(CliError::Config(format!("contour grid for n={n} is incomplete")));
        }
        for (i, row) in grid.iter().enumerate() {
            if row.windows(2).any(|w| w[1] > w[0]) {
                return Err(CliError::Config(format!(
                    "contour grid n={n}: epsilon is not nonincreasing in p at alpha={}",
                    alphas[i]
                )));
            }
        }
        for j in 0..ps.len() {
            if (1..alphas.len()).any(|i| grid[i][j] < grid[i - 1][j]) {
                return Err(CliError::Config(format!(
                    "contour grid n={n}: epsilon is not nondecreasing in alpha at p={}",
                    ps[j]
                )));
            }
        }
        let x = Axis::new(alphas[0], alphas[alphas.len() - 1], false);
        let y = Axis::new(ps[0], ps[ps.len() - 1], false);
        let mut panel = Panel::new(format!("{model}, n = {n}"), "α", "p", x, y);
        let (lo, hi) = grid
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if hi > lo {
            for l in 1..=8 {
                let level = lo + (hi - lo) * l as f64 / 9.0;
                let color = PALETTE[(l - 1) % PALETTE.len()];
                let segs = marching_squares(&alphas, &ps, &grid, level);
                for &(a, b) in &segs {
                    panel.segment(a, b, color);
                }
                if let Some(&(a, _)) = segs.first() {
                    panel.text(a, &label(level), color);
                }
            }
        }
        let mark = alphas.iter().position(|&a| (a - 0.5).abs() < 1e-9).zip(ps.iter().position(|&p| (p - 0.95).abs() < 1e-9));
        if let Some((i, j)) = mark {
            let (cx, cy) = (panel.px(0.5), panel.py(0.95));
            let _ = writeln!(
                panel.body,
                r#"<path d="M{:.2},{:.2} l10,10 m0,-10 l-10,10" stroke="black" stroke-width="2"/>"#,
                cx - 5.0,
                cy - 5.0
            );
            panel.text((0.5, 0.95), &format!("  ε = {}", label(grid[i][j])), "black");
        }
        panels.push(panel);
    }
    Ok(document("ε(α, p)", &panels))
}

fn plot_snapshots(rows: &[SnapshotRow]) -> Result<String, CliError> {
    let model = rows.first().map(|r| r.model.clone()).unwrap_or_default();
    let mut by_panel: BTreeMap<(u32, Option<u64>), Series<u64, SnapshotRow>> = BTreeMap::new();
    for r in rows {
        by_panel
            .entry((r.n, r.sigma.map(key)))
            .or_default()
            .entry(r.replicate)
            .or_default()
            .push(r);
    }
    let mut panels = Vec::new();
    for ((n, _), reps) in by_panel {
        let first = reps.values().next().expect("nonempty")[0];
        let use_density = reps.values().flatten().all(|r| r.density.is_some());
        let value = |r: &SnapshotRow| if use_density { r.density } else { r.cdf };
        if reps.values().flatten().any(|r| value(r).is_none()) {
            return Err(CliError::Config(format!(
                "snapshots n={n}: every row needs a density or a cdf value"
            )));
        }
        let (x_lo, x_hi) = reps
            .values()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.psi), b.max(r.psi)));
        let y_hi = reps.values().flatten().filter_map(|r| value(r)).fold(0.0, f64::max);
        let y_hi = if use_density { y_hi * 1.05 } else { 1.0 };
        let mut panel = Panel::new(
            format!("{model}, n = {n}{}", sigma_title(first.sigma)),
            "ψ",
            if use_density { "posterior density" } else { "posterior CDF" },
            Axis::new(x_lo, x_hi, false),
            Axis::new(0.0, if y_hi > 0.0 { y_hi } else { 1.0 }, false),
        );
        // shaded ball around the true value
        let (b0, b1) = (panel.px(first.psi0 - first.epsilon), panel.px(first.psi0 + first.epsilon));
        let _ = writeln!(
            panel.body,
            r##"<rect x="{b0:.2}" y="0" width="{:.2}" height="{PANEL_H}" fill="#bbbbbb" fill-opacity="0.4"/>"##,
            (b1 - b0).max(0.5)
        );
        let x0 = panel.px(first.psi0);
        let _ = writeln!(
            panel.body,
            r#"<line x1="{x0:.2}" y1="0" x2="{x0:.2}" y2="{PANEL_H}" stroke="black" stroke-dasharray="4,3"/>"#
        );
        for (i, (rep, pts)) in reps.iter().enumerate() {
            let mut pts = pts.clone();
            pts.sort_by(|a, b| a.psi.total_cmp(&b.psi));
            let color = PALETTE[i % PALETTE.len()];
            let xy: Vec<(f64, f64)> = pts.iter().map(|r| (r.psi, value(r).expect("checked"))).collect();
            panel.line(&xy, color, false);
            panel.legend.push((format!("replicate {rep}"), color));
        }
        panels.push(panel);
    }
    Ok(document("posterior snapshots; shaded: [ψ₀ − ε, ψ₀ + ε]", &panels))
}

/// Render `table` as the requested kind of plot.
pub fn render(table: &ResultTable, kind: PlotKind) -> Result<String, CliError> {
    if table.is_empty() {
        return Err(CliError::Config("nothing to plot: the table has no rows".into()));
    }
    match (kind, table) {
        (PlotKind::Curve, ResultTable::Curve(rows)) => plot_curves(rows),
        (PlotKind::Series, ResultTable::Solve(rows)) => plot_series(rows),
        (PlotKind::Contour, ResultTable::Solve(rows)) => plot_contours(rows),
        (PlotKind::Snapshots, ResultTable::Snapshots(rows)) => plot_snapshots(rows),
        _ => Err(schema_error(kind, table)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marching_squares_on_a_plane() {
        // v = x + y on the unit square grid; the level 1 set is the anti-diagonal
        let xs = [0.0, 0.5, 1.0];
        let ys = [0.0, 0.5, 1.0];
        let v: Vec<Vec<f64>> = xs.iter().map(|x| ys.iter().map(|y| x + y).collect()).collect();
        let segs = marching_squares(&xs, &ys, &v, 0.75);
        assert!(!segs.is_empty());
        for (a, b) in segs {
            assert!((a.0 + a.1 - 0.75).abs() < 1e-12);
            assert!((b.0 + b.1 - 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn curve_plot_rejects_increasing_series() {
        let row = |eps: f64, p: f64| CurveRow {
            model: "m".into(),
            n: 1,
            sigma: None,
            alpha: 0.5,
            epsilon: eps,
            p_hat: p,
            mc_se: 0.0,
            k: 1,
            seed: 0,
        };
        let ok = ResultTable::Curve(vec![row(0.0, 1.0), row(0.1, 0.5)]);
        assert!(render(&ok, PlotKind::Curve).unwrap().starts_with("<svg"));
        let bad = ResultTable::Curve(vec![row(0.0, 0.5), row(0.1, 0.6)]);
        assert!(render(&bad, PlotKind::Curve).is_err());
        assert!(render(&ok, PlotKind::Contour).is_err());
    }

    #[test]
    fn contour_plot_checks_grid_order() {
        let cell = |a: f64, p: f64, e: f64| SolveRow {
            model: "m".into(),
            n: 3,
            alpha: a,
            p,
            epsilon_solved: e,
            k: 1,
            seed: 0,
        };
        let good = vec![cell(0.5, 0.5, 2.0), cell(0.5, 0.95, 1.0), cell(0.9, 0.5, 3.0), cell(0.9, 0.95, 1.5)];
        let svg = render(&ResultTable::Solve(good.clone()), PlotKind::Contour).unwrap();
        assert!(svg.contains("ε = 1"));
        let mut bad = good;
        bad[3].epsilon_solved = 0.5;
        assert!(render(&ResultTable::Solve(bad), PlotKind::Contour).is_err());
    }
}
