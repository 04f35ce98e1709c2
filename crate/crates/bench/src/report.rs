//! Error metrics against a reference and their CSV encoding.

use std::fmt::Write as _;

use spdflow_core::integrators::Trajectory;
use spdflow_core::manifold::affine_distance;
use spdflow_core::matcore::{SpdMat, SymMat};

/// 17 significant digits, which round-trips every `f64`.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trajectory_header(n: usize) -> String {
    let mut h = String::from("t");
    for i in 0..n {
        for j in i..n {
            write!(h, ",p_{}{}", i + 1, j + 1).unwrap();
        }
    }
    h.push_str(",min_eig,spd");
    h
}

pub fn trajectory_csv(tr: &Trajectory, n: usize) -> String {
    let mut out = trajectory_header(n);
    out.push('\n');
    for ((t, p), d) in tr.times.iter().zip(&tr.points).zip(&tr.diagnostics) {
        out.push_str(&fmt_num(*t));
        for i in 0..n {
            for j in i..n {
                out.push(',');
                out.push_str(&fmt_num(p[(i, j)]));
            }
        }
        writeln!(out, ",{},{}", fmt_num(d.min_eig), d.spd).unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub t: f64,
    pub integrator: String,
    /// `None` once the integrator has failed.
    pub frob_dist: Option<f64>,
    /// Present exactly when `spd` is true.
    pub affine_dist: Option<f64>,
    pub spd: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorSummary {
    pub integrator: String,
    pub max_frob: f64,
    pub final_frob: Option<f64>,
    pub final_affine: Option<f64>,
    pub max_affine: Option<f64>,
    pub non_spd_points: usize,
    /// Grid interval at which the integrator stopped, with the reason.
    pub failure: Option<(usize, String)>,
}

impl IntegratorSummary {
    pub fn stayed_on_manifold(&self) -> bool {
        self.non_spd_points == 0 && self.failure.is_none()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
    pub summaries: Vec<IntegratorSummary>,
}

impl ErrorReport {
    /// Appends rows for one trajectory. Grid points the integrator never
    /// reached are recorded with every metric missing and `spd` false.
    pub fn add(
        &mut self,
        integrator: &str,
        grid: &[f64],
        tr: &Trajectory,
        reference: &Trajectory,
        failure: Option<(usize, String)>,
    ) {
        let mut summary = IntegratorSummary {
            integrator: integrator.to_string(),
            max_frob: 0.0,
            final_frob: None,
            final_affine: None,
            max_affine: None,
            non_spd_points: 0,
            failure,
        };
        for (k, &t) in grid.iter().enumerate() {
            let row = match tr.points.get(k) {
                Some(p) => {
                    let r = &reference.points[k];
                    let frob = (p.as_mat() - r.as_mat()).norm();
                    let affine = if tr.diagnostics[k].spd { affine_between(r, p) } else { None };
                    summary.max_frob = summary.max_frob.max(frob);
                    if let Some(a) = affine {
                        summary.max_affine = Some(summary.max_affine.map_or(a, |m: f64| m.max(a)));
                    }
                    ErrorRow {
                        t,
                        integrator: integrator.to_string(),
                        frob_dist: Some(frob),
                        affine_dist: affine,
                        spd: affine.is_some(),
                    }
                }
                None => ErrorRow {
                    t,
                    integrator: integrator.to_string(),
                    frob_dist: None,
                    affine_dist: None,
                    spd: false,
                },
            };
            if !row.spd {
                summary.non_spd_points += 1;
            }
            if k + 1 == grid.len() {
                summary.final_frob = row.frob_dist;
                summary.final_affine = row.affine_dist;
            }
            self.rows.push(row);
        }
        self.summaries.push(summary);
    }

    pub fn summary(&self, integrator: &str) -> Option<&IntegratorSummary> {
        self.summaries.iter().find(|s| s.integrator == integrator)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,integrator,frob_dist,affine_dist_or_NA,spd\n");
        let na = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), fmt_num);
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt_num(r.t),
                r.integrator,
                na(r.frob_dist),
                na(r.affine_dist),
                r.spd
            )
            .unwrap();
        }
        out
    }
}

fn affine_between(reference: &SymMat, p: &SymMat) -> Option<f64> {
    let r = SpdMat::from_sym(reference.clone()).ok()?;
    let p = SpdMat::from_sym(p.clone()).ok()?;
    affine_distance(&r, &p).ok()
}
