//! Sign maps of the invasion rates over the `(s, λ)` plane, and their zero
//! level lines.
//!
//! Cells are independent; they are evaluated in parallel and returned in
//! row-major `(s, λ)` order whatever the completion order, so output is
//! byte-identical across runs and thread counts.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::Figure;
use crate::error::{invalid, Error, Result};
use crate::gradostat::{classify_gradostat, gamma0, invasion_gamma, GAMMA_ZERO_BAND};
use crate::invasion::{classify_switching, lambda0, lambda_two_species, ZERO_BAND_DEFAULT};
use crate::model::{DuoConfig, Species};
use crate::trajectory::fmt_num;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub s: Vec<f64>,
    pub lambda: Vec<f64>,
    pub label: String,
}

impl SweepGrid {
    /// `n_s` uniform values on `[s_min, s_max]` by `n_lambda` log-spaced values
    /// on `[lambda_min, lambda_max]`.
    pub fn new(
        label: impl Into<String>,
        (s_min, s_max, n_s): (f64, f64, usize),
        (lambda_min, lambda_max, n_lambda): (f64, f64, usize),
    ) -> Result<Self> {
        if n_s < 2 || n_lambda < 2 {
            return Err(invalid("grid", "need at least 2 values along each axis"));
        }
        if !(0.0 < s_min && s_min < s_max && s_max < 1.0) {
            return Err(invalid("grid.s", "need 0 < s_min < s_max < 1"));
        }
        if !(0.0 < lambda_min && lambda_min < lambda_max && lambda_max.is_finite()) {
            return Err(invalid("grid.lambda", "need 0 < lambda_min < lambda_max"));
        }
        let lin = |a: f64, b: f64, n: usize, i: usize| a + (b - a) * i as f64 / (n - 1) as f64;
        let (la, lb) = (lambda_min.ln(), lambda_max.ln());
        Ok(Self {
            s: (0..n_s).map(|i| lin(s_min, s_max, n_s, i)).collect(),
            // Endpoints exactly as given, not as exp(ln(x)).
            lambda: (0..n_lambda)
                .map(|i| match i {
                    0 => lambda_min,
                    i if i == n_lambda - 1 => lambda_max,
                    i => lin(la, lb, n_lambda, i).exp(),
                })
                .collect(),
            label: label.into(),
        })
    }

    /// 63 values of `s` in `[0.015, 0.985]` by 64 values of `λ` in `[10⁻², 10³]`.
    pub fn default_for(label: impl Into<String>) -> Self {
        Self::new(label, (0.015, 0.985, 63), (1e-2, 1e3, 64)).expect("default grid is valid")
    }

    pub fn len(&self) -> usize {
        self.s.len() * self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    /// `(Λ⁰, Γ⁰)`: invasion of the species-free systems.
    OneSpecies,
    /// `(Λ, Γ)`: invasion of the other species' attractor; needs a common input.
    TwoSpecies,
}

/// Sign of a rate: `0` inside the zero band, `None` when the rate is missing.
pub fn sign_of(x: f64, band: f64) -> Option<i8> {
    if x.is_nan() {
        None
    } else if x.abs() <= band {
        Some(0)
    } else if x > 0.0 {
        Some(1)
    } else {
        Some(-1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignMapCell {
    pub s: f64,
    pub lambda: f64,
    /// Switched-model rates for `u`, `v` (`Λ⁰` or `Λ` by mode); `NaN` if unavailable.
    pub rate: [f64; 2],
    /// Gradostat rates for `u`, `v` (`Γ⁰` or `Γ` by mode); `NaN` if unavailable.
    pub grate: [f64; 2],
    pub sign: [Option<i8>; 2],
    pub gsign: [Option<i8>; 2],
    pub verdict_prob: String,
    pub verdict_det: String,
    /// Messages of the operations that failed in this cell.
    pub errors: Vec<String>,
}

/// Selects one rate column of a sign map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateSelector {
    RateU,
    RateV,
    GrateU,
    GrateV,
}

impl RateSelector {
    pub const ALL: [RateSelector; 4] = [
        RateSelector::RateU,
        RateSelector::RateV,
        RateSelector::GrateU,
        RateSelector::GrateV,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RateSelector::RateU => "rate_u",
            RateSelector::RateV => "rate_v",
            RateSelector::GrateU => "grate_u",
            RateSelector::GrateV => "grate_v",
        }
    }

    pub fn pick(self, cell: &SignMapCell) -> f64 {
        match self {
            RateSelector::RateU => cell.rate[0],
            RateSelector::RateV => cell.rate[1],
            RateSelector::GrateU => cell.grate[0],
            RateSelector::GrateV => cell.grate[1],
        }
    }
}

/// Evaluation of a whole grid, in row-major `(s, λ)` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignMap {
    pub grid: SweepGrid,
    pub mode: SweepMode,
    pub cells: Vec<SignMapCell>,
}

impl SignMap {
    pub fn cell(&self, i_s: usize, i_lambda: usize) -> &SignMapCell {
        &self.cells[i_s * self.grid.lambda.len() + i_lambda]
    }
}

/// `persistence`, `extinction` or `inconclusive` from the sign of a face rate;
/// `error` for a missing rate.
pub fn one_species_verdict(x: f64, band: f64) -> String {
    match sign_of(x, band) {
        Some(1) => "persistence",
        Some(-1) => "extinction",
        Some(_) => "inconclusive",
        None => "error",
    }
    .to_string()
}

fn record(errors: &mut Vec<String>, what: &str, r: Result<f64>) -> f64 {
    r.unwrap_or_else(|e| {
        errors.push(format!("{what}: {e}"));
        f64::NAN
    })
}

fn evaluate_cell(template: &DuoConfig, mode: SweepMode, s: f64, lambda: f64) -> SignMapCell {
    let c = template.with_coupling(s, lambda);
    let mut errors = Vec::new();
    let (rate, grate, verdict_prob, verdict_det) = match mode {
        SweepMode::OneSpecies => {
            let rate = Species::BOTH.map(|w| record(&mut errors, &format!("lambda0_{w}"), lambda0(&c, w)));
            let grate = Species::BOTH.map(|w| record(&mut errors, &format!("gamma0_{w}"), gamma0(&c, w)));
            let vp = one_species_verdict(rate[0], ZERO_BAND_DEFAULT);
            let vd = one_species_verdict(grate[0], GAMMA_ZERO_BAND);
            (rate, grate, vp, vd)
        }
        SweepMode::TwoSpecies => {
            let rate = Species::BOTH.map(|w| {
                record(&mut errors, &format!("lambda_{w}"), lambda_two_species(&c, w))
            });
            // Γ_w needs E_w̄; its absence is part of the verdict, not a failure.
            let grate = Species::BOTH.map(|w| match invasion_gamma(&c, w) {
                Ok(g) => g,
                Err(Error::MissingEquilibrium(_)) => f64::NAN,
                Err(e) => record(&mut errors, &format!("gamma_{w}"), Err(e)),
            });
            let vp = match classify_switching(&c, ZERO_BAND_DEFAULT) {
                Ok(v) => v.case.tag().to_string(),
                Err(e) => {
                    errors.push(format!("classify_switching: {e}"));
                    "error".to_string()
                }
            };
            let vd = match classify_gradostat(&c, GAMMA_ZERO_BAND) {
                Ok(v) => v.case.tag().to_string(),
                Err(e) => {
                    errors.push(format!("classify_gradostat: {e}"));
                    "error".to_string()
                }
            };
            (rate, grate, vp, vd)
        }
    };
    SignMapCell {
        s,
        lambda,
        rate,
        grate,
        sign: rate.map(|x| sign_of(x, ZERO_BAND_DEFAULT)),
        gsign: grate.map(|x| sign_of(x, GAMMA_ZERO_BAND)),
        verdict_prob,
        verdict_det,
        errors,
    }
}

/// Evaluates every grid point with `template`'s vessels. `jobs = None` uses
/// the global thread pool; per-cell failures are recorded, never fatal.
pub fn sign_map(template: &DuoConfig, grid: &SweepGrid, mode: SweepMode, jobs: Option<usize>) -> Result<SignMap> {
    template.with_coupling(0.5, 1.0).validate()?;
    if mode == SweepMode::TwoSpecies {
        template.common_input()?;
    }
    let n_l = grid.lambda.len();
    let run = || -> Vec<SignMapCell> {
        (0..grid.len())
            .into_par_iter()
            .map(|k| evaluate_cell(template, mode, grid.s[k / n_l], grid.lambda[k % n_l]))
            .collect()
    };
    let cells = match jobs {
        None => run(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run),
    };
    Ok(SignMap {
        grid: grid.clone(),
        mode,
        cells,
    })
}

pub type Polyline = Vec<(f64, f64)>;

/// Zero level lines of one rate column by marching squares.
///
/// Crossings are interpolated linearly in `(s, ln λ)`, the coordinates in which
/// the grid is uniform. Saddle squares are resolved by the sign of the mean of
/// their corners. Squares with a missing corner are skipped.
pub fn zero_contours(map: &SignMap, selector: RateSelector) -> Vec<Polyline> {
    let (ns, nl) = (map.grid.s.len(), map.grid.lambda.len());
    let val = |i: usize, j: usize| selector.pick(map.cell(i, j));
    let log_l: Vec<f64> = map.grid.lambda.iter().map(|l| l.ln()).collect();

    // Edge keys: (0, i, j) joins (i, j)–(i+1, j); (1, i, j) joins (i, j)–(i, j+1).
    type Edge = (u8, usize, usize);
    let point = |e: Edge| -> (f64, f64) {
        let (a, b) = match e.0 {
            0 => ((e.1, e.2), (e.1 + 1, e.2)),
            _ => ((e.1, e.2), (e.1, e.2 + 1)),
        };
        let (va, vb) = (val(a.0, a.1), val(b.0, b.1));
        let t = if va == vb { 0.5 } else { va / (va - vb) };
        let s = map.grid.s[a.0] + t * (map.grid.s[b.0] - map.grid.s[a.0]);
        let l = log_l[a.1] + t * (log_l[b.1] - log_l[a.1]);
        (s, l.exp())
    };

    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for i in 0..ns.saturating_sub(1) {
        for j in 0..nl.saturating_sub(1) {
            // Corners counter-clockwise: (i,j), (i+1,j), (i+1,j+1), (i,j+1).
            let v = [val(i, j), val(i + 1, j), val(i + 1, j + 1), val(i, j + 1)];
            if v.iter().any(|x| x.is_nan()) {
                continue;
            }
            let above: Vec<bool> = v.iter().map(|&x| x > 0.0).collect();
            let edges: [Edge; 4] = [(0, i, j), (1, i + 1, j), (0, i, j + 1), (1, i, j)];
            let cut: Vec<usize> = (0..4).filter(|&k| above[k] != above[(k + 1) % 4]).collect();
            match cut.len() {
                2 => segments.push((edges[cut[0]], edges[cut[1]])),
                4 => {
                    let centre_above = v.iter().sum::<f64>() > 0.0;
                    // Join each edge to the neighbour that keeps the centre on
                    // the side it belongs to.
                    if centre_above == above[0] {
                        segments.push((edges[1], edges[2]));
                        segments.push((edges[3], edges[0]));
                    } else {
                        segments.push((edges[0], edges[1]));
                        segments.push((edges[2], edges[3]));
                    }
                }
                _ => {}
            }
        }
    }

    let mut at: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        at.entry(*a).or_default().push(k);
        at.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let walk = |start_seg: usize, start_edge: Edge, used: &mut Vec<bool>| -> Vec<Edge> {
        let mut path = vec![start_edge];
        let (mut seg, mut edge) = (start_seg, start_edge);
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            edge = if a == edge { b } else { a };
            path.push(edge);
            match at[&edge].iter().find(|&&k| !used[k]) {
                Some(&k) => seg = k,
                None => break,
            }
        }
        path
    };
    // Open chains first (start at a boundary edge), in a deterministic order.
    let mut ends: Vec<Edge> = at.iter().filter(|(_, v)| v.len() == 1).map(|(e, _)| *e).collect();
    ends.sort();
    for e in ends {
        let k = at[&e][0];
        if !used[k] {
            lines.push(walk(k, e, &mut used));
        }
    }
    for k in 0..segments.len() {
        if !used[k] {
            lines.push(walk(k, segments[k].0, &mut used));
        }
    }
    lines
        .into_iter()
        .map(|path| path.into_iter().map(point).collect())
        .collect()
}

fn opt_num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        fmt_num(x)
    }
}

fn opt_sign(x: Option<i8>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_sign_map_csv<W: Write>(mut w: W, map: &SignMap) -> io::Result<()> {
    writeln!(
        w,
        "s,lambda,rate_u,rate_v,grate_u,grate_v,sign_u,sign_v,gsign_u,gsign_v,verdict_prob,verdict_det"
    )?;
    for c in &map.cells {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_num(c.s),
            fmt_num(c.lambda),
            opt_num(c.rate[0]),
            opt_num(c.rate[1]),
            opt_num(c.grate[0]),
            opt_num(c.grate[1]),
            opt_sign(c.sign[0]),
            opt_sign(c.sign[1]),
            opt_sign(c.gsign[0]),
            opt_sign(c.gsign[1]),
            c.verdict_prob,
            c.verdict_det
        )?;
    }
    Ok(())
}

/// Contours of every rate column; `curve_id` is `<column>:<index>`.
pub fn write_contours_csv<W: Write>(mut w: W, contours: &[(RateSelector, Vec<Polyline>)]) -> io::Result<()> {
    writeln!(w, "curve_id,s,lambda")?;
    for (sel, lines) in contours {
        for (k, line) in lines.iter().enumerate() {
            for &(s, l) in line {
                writeln!(w, "{}:{},{},{}", sel.name(), k, fmt_num(s), fmt_num(l))?;
            }
        }
    }
    Ok(())
}

/// Sign map plus contours of every rate column.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureBundle {
    pub name: String,
    pub map: SignMap,
    pub contours: Vec<(RateSelector, Vec<Polyline>)>,
}

impl FigureBundle {
    pub fn from_map(name: impl Into<String>, map: SignMap) -> Self {
        let contours = RateSelector::ALL.iter().map(|&sel| (sel, zero_contours(&map, sel))).collect();
        Self {
            name: name.into(),
            map,
            contours,
        }
    }

    /// Writes `<name>_signmap.csv` and `<name>_contours.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let map_path = dir.join(format!("{}_signmap.csv", self.name));
        let contour_path = dir.join(format!("{}_contours.csv", self.name));
        write_sign_map_csv(io::BufWriter::new(fs::File::create(&map_path)?), &self.map)?;
        write_contours_csv(io::BufWriter::new(fs::File::create(&contour_path)?), &self.contours)?;
        Ok(vec![map_path, contour_path])
    }
}

/// Sweeps one of the reference parameter sets on `grid` (the default grid when
/// `None`).
pub fn reproduce_figure(fig: Figure, grid: Option<&SweepGrid>, jobs: Option<usize>) -> Result<FigureBundle> {
    let grid = grid.cloned().unwrap_or_else(|| SweepGrid::default_for(fig.name()));
    let mode = if fig.one_species() {
        SweepMode::OneSpecies
    } else {
        SweepMode::TwoSpecies
    };
    let map = sign_map(&fig.config(0.5, 1.0), &grid, mode, jobs)?;
    Ok(FigureBundle::from_map(fig.name(), map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets;
    use crate::model::{MonodParams, VesselParams};

    fn small(label: &str) -> SweepGrid {
        SweepGrid::new(label, (0.05, 0.95, 7), (1e-2, 1e2, 6)).unwrap()
    }

    #[test]
    fn grid_shape_and_order() {
        let g = small("t");
        assert_eq!(g.len(), 42);
        assert!((g.lambda[0] - 1e-2).abs() < 1e-16 && (g.lambda[5] - 1e2).abs() < 1e-12);
        let map = sign_map(&datasets::pi2(0.5, 1.0), &g, SweepMode::OneSpecies, Some(2)).unwrap();
        assert_eq!(map.cells.len(), 42);
        assert_eq!((map.cells[1].s, map.cells[1].lambda), (g.s[0], g.lambda[1]));
        assert_eq!(map.cell(3, 4).s, g.s[3]);
        assert!(SweepGrid::new("bad", (0.0, 0.9, 3), (1.0, 2.0, 3)).is_err());
    }

    #[test]
    fn identical_vessels_give_flat_rates() {
        let m = MonodParams { a: 2.0, b: 1.0 };
        let v = VesselParams::new(1.0, 3.0, m, m).unwrap();
        let c = DuoConfig::new(v, v, 0.5, 1.0).unwrap();
        let map = sign_map(&c, &small("flat"), SweepMode::OneSpecies, None).unwrap();
        let expect = 2.0 * 3.0 / 4.0 - 1.0;
        for cell in &map.cells {
            assert!((cell.rate[0] - expect).abs() < 1e-12 && (cell.grate[0] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let g = small("det");
        let text = |jobs| {
            let map = sign_map(&datasets::fig3a(0.5, 1.0), &g, SweepMode::TwoSpecies, jobs).unwrap();
            let mut buf = Vec::new();
            write_sign_map_csv(&mut buf, &map).unwrap();
            buf
        };
        assert_eq!(text(Some(1)), text(Some(4)));
    }

    #[test]
    fn unequal_inputs_rejected_in_two_species_mode() {
        assert!(sign_map(&datasets::pi1(0.5, 1.0), &small("x"), SweepMode::TwoSpecies, None).is_err());
    }

    fn synthetic(f: impl Fn(f64, f64) -> f64) -> SignMap {
        let grid = SweepGrid::new("syn", (0.05, 0.95, 19), (1e-2, 1e2, 17)).unwrap();
        let cells = (0..grid.len())
            .map(|k| {
                let (s, l) = (grid.s[k / 17], grid.lambda[k % 17]);
                let x = f(s, l);
                SignMapCell {
                    s,
                    lambda: l,
                    rate: [x, 1.0],
                    grate: [f64::NAN; 2],
                    sign: [sign_of(x, 0.0), Some(1)],
                    gsign: [None; 2],
                    verdict_prob: String::new(),
                    verdict_det: String::new(),
                    errors: vec![],
                }
            })
            .collect();
        SignMap {
            grid,
            mode: SweepMode::OneSpecies,
            cells,
        }
    }

    #[test]
    fn contour_of_vertical_line() {
        let map = synthetic(|s, _| s - 0.5);
        let lines = zero_contours(&map, RateSelector::RateU);
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].len(), 17);
        for &(s, _) in &lines[0] {
            assert!((s - 0.5).abs() < 1e-12);
        }
        assert!(zero_contours(&map, RateSelector::RateV).is_empty());
        assert!(zero_contours(&map, RateSelector::GrateU).is_empty());
    }

    #[test]
    fn closed_contour_is_a_loop() {
        let map = synthetic(|s, l| (s - 0.5).powi(2) + (l.log10()).powi(2) / 16.0 - 0.04);
        let lines = zero_contours(&map, RateSelector::RateU);
        assert_eq!(lines.len(), 1);
        let line = &lines[0];
        let (a, b) = (line[0], line[line.len() - 1]);
        assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
    }

    #[test]
    fn crossings_sit_between_sign_flips() {
        let map = sign_map(&datasets::pi1(0.5, 1.0), &small("pi1"), SweepMode::OneSpecies, None).unwrap();
        for line in zero_contours(&map, RateSelector::RateU) {
            for &(s, l) in &line {
                let i = map.grid.s.iter().rposition(|&x| x <= s + 1e-12).unwrap();
                let j = map.grid.lambda.iter().rposition(|&x| x <= l * (1.0 + 1e-12)).unwrap();
                let corners = [(i, j), ((i + 1).min(6), j), (i, (j + 1).min(5)), ((i + 1).min(6), (j + 1).min(5))];
                let signs: Vec<bool> = corners.iter().map(|&(a, b)| map.cell(a, b).rate[0] > 0.0).collect();
                assert!(signs.iter().any(|&x| x) && signs.iter().any(|&x| !x), "no flip near ({s}, {l})");
            }
        }
    }
}
