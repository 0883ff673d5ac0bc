use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};
use spinfactor::dynamics::{analyze_dynamics, HolomorphicMap};
use spinfactor::fixed_point::{
    density_witness, orthogonal_construction, orthogonal_truncation_bound, sliver_scan, weak_fixed_point_with_budget,
    WeakFixedPointCondition,
};
use spinfactor::sampling::{gaussian_element, random_in_ball, singular_pair, stream_rng};
use spinfactor::spin::{bergman_operator, quadratic_rep, quasi_inverse, quasi_inverse_tolerance, r_invariant, triple_product};
use spinfactor::{Automorphism, DynamicsOutcome, Schedule, SpinElement, SpinError, Transvection};
use thiserror::Error;

use crate::config::{Command, ConfigError, ExperimentConfig};
use crate::report::{Check, Report, Row};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Module { context: String, source: SpinError },
}

trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, ExperimentError>;
}

impl<T> Context<T> for spinfactor::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, ExperimentError> {
        self.map_err(|source| ExperimentError::Module { context: what(), source })
    }
}

// Thresholds for the algebraic identities; residuals are normalized by the
// natural scale of each side.
pub const JTI_TOL: f64 = 1e-10;
pub const CUBE_TOL: f64 = 1e-10;
pub const SUBMULT_TOL: f64 = 1e-10;
pub const J_EQUIV_TOL: f64 = 1e-12;
pub const QUASI_INVERSE_TOL: f64 = 1e-10;
pub const TRANSVECTION_TOL: f64 = 1e-10;

pub const ORTHOGONAL_TOL: f64 = 1e-8;
pub const SLIVER_TOL: f64 = 1e-10;
pub const ORBIT_TAIL_TOL: f64 = 1e-5;
/// Density witnesses must leave `|r|` above this.
pub const DENSITY_R_FLOOR: f64 = 1e-12;

/// Weak-fixed-point schedule `1 - 2^{-k}`, `k = 1..=30`.
pub const WEAKFP_STEPS: u32 = 30;
/// Radius of the ball random start points are drawn from.
pub const START_RADIUS: f64 = 0.9;
/// Every tenth density sample is a constructed pair with `r = 0`.
pub const CONSTRUCTED_EVERY: usize = 10;

pub fn run_experiment(config: &ExperimentConfig) -> Result<Report, ExperimentError> {
    config.validate()?;
    let clock = Instant::now();
    let mut report = Report::new(config.clone());
    match config.command {
        Command::Axioms => axioms(config, &mut report)?,
        Command::FixpointOrthogonal => fixpoint_orthogonal(config, &mut report)?,
        Command::FixpointSliver => fixpoint_sliver(config, &mut report)?,
        Command::Weakfp => weakfp(config, &mut report)?,
        Command::Dynamics => dynamics(config, &mut report)?,
        Command::Density => density(config, &mut report)?,
    }
    report.wall_clock_seconds = clock.elapsed().as_secs_f64();
    Ok(report)
}

fn e1(n: usize) -> SpinElement {
    SpinElement::basis(n, 0)
}

fn max_of(rows: &[Row], key: &str) -> f64 {
    rows.iter()
        .filter_map(|r| match r.get(key) {
            Some(crate::report::Cell::Float(v)) => Some(*v),
            _ => None,
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy)]
struct AxiomSample {
    dim: usize,
    jti: f64,
    cube: f64,
    submult: f64,
    j_equiv: f64,
    quasi_inverse: Option<f64>,
    transvection_inverse: f64,
}

fn axiom_sample(seed: u64, index: usize, max_dim: usize) -> spinfactor::Result<AxiomSample> {
    let n = 2 + index % (max_dim - 1);
    let mut rng = stream_rng(seed, index as u64);
    let v: Vec<SpinElement> = (0..5).map(|_| gaussian_element(&mut rng, n)).collect();
    let tp = triple_product;
    let (a, b, x, y, z) = (&v[0], &v[1], &v[2], &v[3], &v[4]);

    let lhs = tp(a, b, &tp(x, y, z)?)?;
    let rhs = &(&tp(&tp(a, b, x)?, y, z)? - &tp(x, &tp(b, a, y)?, z)?) + &tp(x, y, &tp(a, b, z)?)?;
    let jti = (&lhs - &rhs).spin_norm() / v.iter().map(SpinElement::spin_norm).product::<f64>();

    let nx = x.spin_norm();
    let cube = (tp(x, x, x)?.spin_norm() - nx.powi(3)).abs() / nx.powi(3);
    let bound = nx * y.spin_norm() * z.spin_norm();
    let submult = (tp(x, y, z)?.spin_norm() / bound - 1.0).max(0.0);
    let j_equiv = tp(x, y, z)?.conj_j().max_abs_diff(&tp(&x.conj_j(), &y.conj_j(), &z.conj_j())?);

    let p = random_in_ball(&mut rng, n, 0.95);
    let q = random_in_ball(&mut rng, n, 0.95);
    let quasi_inverse = if r_invariant(&p, &q).norm() > quasi_inverse_tolerance(&p, &q) {
        let lhs = bergman_operator(&p, &q)?.apply(&quasi_inverse(&p, &q)?);
        Some(lhs.max_abs_diff(&(&p - &quadratic_rep(&p).apply(&q))))
    } else {
        None
    };

    let g = Transvection::new(random_in_ball(&mut rng, n, 0.9))?;
    let w = random_in_ball(&mut rng, n, 0.9);
    let transvection_inverse = g.inverse().apply(&g.apply(&w)?)?.max_abs_diff(&w);

    Ok(AxiomSample { dim: n, jti, cube, submult, j_equiv, quasi_inverse, transvection_inverse })
}

fn axioms(cfg: &ExperimentConfig, report: &mut Report) -> Result<(), ExperimentError> {
    let samples: Vec<AxiomSample> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| axiom_sample(cfg.seed, i, cfg.dim).context(|| format!("axiom sample {i}")))
        .collect::<Result<_, _>>()?;
    report.items = samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            Row::new()
                .with("index", i)
                .with("dim", s.dim)
                .with("jti", s.jti)
                .with("cube", s.cube)
                .with("submult", s.submult)
                .with("j_equiv", s.j_equiv)
                .with("quasi_inverse", s.quasi_inverse)
                .with("transvection_inverse", s.transvection_inverse)
        })
        .collect();
    let items = &report.items;
    report.checks = vec![
        Check::at_most("jti", max_of(items, "jti"), JTI_TOL),
        Check::at_most("cube", max_of(items, "cube"), CUBE_TOL),
        Check::at_most("submult", max_of(items, "submult"), SUBMULT_TOL),
        Check::at_most("j_equiv", max_of(items, "j_equiv"), J_EQUIV_TOL),
        Check::at_most("quasi_inverse", max_of(items, "quasi_inverse"), QUASI_INVERSE_TOL),
        Check::at_most("transvection_inverse", max_of(items, "transvection_inverse"), TRANSVECTION_TOL),
    ];
    let quasi_invertible = samples.iter().filter(|s| s.quasi_inverse.is_some()).count();
    report.details = json!({ "quasi_invertible_pairs": quasi_invertible });
    Ok(())
}

fn fixpoint_orthogonal(cfg: &ExperimentConfig, report: &mut Report) -> Result<(), ExperimentError> {
    let n = cfg.dim;
    let iso = cfg.isometry.build(n)?;
    let k_terms = cfg.max_iter.min(n - 1);
    let z0 = orthogonal_construction(&iso, cfg.t, &e1(n), k_terms).context(|| "orthogonal construction".into())?;
    let g = Automorphism::new(iso, e1(n).scale_real(cfg.t)).context(|| "automorphism".into())?;
    let residual = g.apply(&z0).context(|| "g(z0)".into())?.distance(&z0);
    let norm_defect = (z0.spin_norm() - 1.0).abs();
    report.details = json!({
        "k_terms": k_terms,
        "z0": z0.to_interleaved(),
        "residual": residual,
        "norm_defect": norm_defect,
        "truncation_bound": orthogonal_truncation_bound(cfg.t, k_terms),
    });
    report.checks = vec![
        Check::at_most("norm_defect", norm_defect, ORTHOGONAL_TOL),
        Check::at_most("residual", residual, ORTHOGONAL_TOL),
    ];
    Ok(())
}

fn fixpoint_sliver(cfg: &ExperimentConfig, report: &mut Report) -> Result<(), ExperimentError> {
    let n = cfg.dim;
    let iso = cfg.isometry.build(n)?;
    let data = sliver_scan(&iso, cfg.t, &e1(n), cfg.tol).context(|| "sliver scan".into())?;
    report.items = data.h_profile.iter().map(|&(u, h)| Row::new().with("u", u).with("h", h)).collect();
    report.details = json!({
        "witnessed": data.witnessed(),
        "target": data.target,
        "coefficients": data.coefficients,
        "u0": data.u0,
        "z0": data.z0.as_ref().map(SpinElement::to_interleaved),
        "root_residual": data.root_residual,
        "norm_defect": data.norm_defect,
        "j_defect": data.j_defect,
        "residual": data.residual,
    });
    // An unwitnessed condition is an outcome, not a failure.
    if let (Some(norm_defect), Some(residual)) = (data.norm_defect, data.residual) {
        report.checks = vec![
            Check::at_most("norm_defect", norm_defect, SLIVER_TOL),
            Check::at_most("residual", residual, SLIVER_TOL),
        ];
    }
    Ok(())
}

fn condition_label(c: WeakFixedPointCondition) -> &'static str {
    match c {
        WeakFixedPointCondition::BoundaryLimit => "(i) boundary limit",
        WeakFixedPointCondition::OriginNonMaximal => "(ii) origin, parameter not maximal",
        WeakFixedPointCondition::OriginBoundedAway => "(iii) origin, iterates bounded away",
        WeakFixedPointCondition::RankOneIterates => "(iv) rank-one iterates",
    }
}

fn weakfp(cfg: &ExperimentConfig, report: &mut Report) -> Result<(), ExperimentError> {
    let n = cfg.dim;
    let g = Automorphism::new(cfg.isometry.build(n)?, e1(n).scale_real(cfg.t)).context(|| "automorphism".into())?;
    let schedule = Schedule::geometric(WEAKFP_STEPS);
    let wfp = weak_fixed_point_with_budget(&g, &schedule, cfg.tol, cfg.max_iter)
        .context(|| "weak fixed point schedule".into())?;
    report.items = wfp
        .alphas
        .iter()
        .zip(&wfp.norms)
        .enumerate()
        .map(|(k, (&alpha, &norm))| Row::new().with("k", k + 1).with("alpha", alpha).with("norm", norm))
        .collect();
    report.details = json!({
        "xi": wfp.xi.to_interleaved(),
        "xi_norm": wfp.xi_norm,
        "residual": wfp.residual,
        "is_fixed": wfp.is_fixed,
        "conditions": wfp.conditions.iter().map(|&c| condition_label(c)).collect::<Vec<_>>(),
        "classification": wfp.classification.map(condition_label),
        "last_pairing": [wfp.last_pairing.re, wfp.last_pairing.im],
    });
    // A limit that meets any sufficient condition must be fixed.
    if wfp.classification.is_some() {
        report.checks = vec![Check::at_most("classified_limit_is_fixed", wfp.residual, spinfactor::fixed_point::FIXED_TOL)];
    }
    Ok(())
}

/// `[ρ ·] T ∘ g_{t e1}`; `t = 0` drops the transvection.
pub fn dynamics_map(cfg: &ExperimentConfig) -> Result<HolomorphicMap, ExperimentError> {
    let n = cfg.dim;
    let mut f = HolomorphicMap::isometry(cfg.isometry.build(n)?);
    if cfg.t > 0.0 {
        let g = Transvection::new(e1(n).scale_real(cfg.t)).context(|| "transvection".into())?;
        f = HolomorphicMap::compose(f, HolomorphicMap::transvection(g)).context(|| "map".into())?;
    }
    if cfg.contraction < 1.0 {
        let s = HolomorphicMap::scale(n, cfg.contraction).context(|| "contraction".into())?;
        f = HolomorphicMap::compose(s, f).context(|| "map".into())?;
    }
    Ok(f)
}

fn dynamics(cfg: &ExperimentConfig, report: &mut Report) -> Result<(), ExperimentError> {
    let f = dynamics_map(cfg)?;
    let starts: Vec<SpinElement> = (0..cfg.samples)
        .map(|i| random_in_ball(&mut stream_rng(cfg.seed, i as u64), cfg.dim, START_RADIUS))
        .collect();
    let outcome = analyze_dynamics(&f, &starts, cfg.max_iter, &Schedule::geometric(WEAKFP_STEPS), cfg.tol)
        .context(|| "dynamics".into())?;
    match &outcome {
        DynamicsOutcome::NotFixedPointFree { wolff } => {
            report.details = json!({
                "outcome": "not_fixed_point_free",
                "xi": wolff.xi.to_interleaved(),
                "xi_norm": wolff.xi_norm,
            });
        }
        DynamicsOutcome::Bidisc { wolff, frame, orbits } => {
            for (s, orbit) in orbits.iter().enumerate() {
                report.items.extend(orbit.residuals.iter().enumerate().map(|(k, r)| {
                    Row::new()
                        .with("start", s)
                        .with("k", k)
                        .with("d_sub", r.d_sub)
                        .with("d_bdry", r.d_bdry)
                        .with("norm", r.norm)
                }));
            }
            let tail_sub = orbits.iter().map(|o| o.tail_d_sub).fold(0.0, f64::max);
            let tail_bdry = orbits.iter().map(|o| o.tail_d_bdry).fold(0.0, f64::max);
            report.details = json!({
                "outcome": "bidisc",
                "xi": wolff.xi.to_interleaved(),
                "xi_norm": wolff.xi_norm,
                "e": frame.e.to_interleaved(),
                "lambda": [frame.lambda.re, frame.lambda.im],
                "tail_d_sub": tail_sub,
                "tail_d_bdry": tail_bdry,
            });
            report.checks = vec![
                Check::at_most("tail_d_sub", tail_sub, ORBIT_TAIL_TOL),
                Check::at_most("tail_d_bdry", tail_bdry, ORBIT_TAIL_TOL),
            ];
        }
    }
    Ok(())
}

/// Pair `i` of the density experiment: constructed with `r = 0` when
/// `i` is a multiple of [`CONSTRUCTED_EVERY`], otherwise random in the ball.
pub fn density_pair(seed: u64, i: usize, n: usize) -> (bool, SpinElement, SpinElement) {
    let mut rng = stream_rng(seed, i as u64);
    if i % CONSTRUCTED_EVERY == 0 {
        let (x, y) = singular_pair(&mut rng, n);
        (true, x, y)
    } else {
        (false, random_in_ball(&mut rng, n, 1.0), random_in_ball(&mut rng, n, 1.0))
    }
}

fn density(cfg: &ExperimentConfig, report: &mut Report) -> Result<(), ExperimentError> {
    let rows: Vec<Row> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let (constructed, x, y) = density_pair(cfg.seed, i, cfg.dim);
            let z = density_witness(&x, &y, cfg.eps, cfg.seed.wrapping_add(i as u64))
                .context(|| format!("density pair {i}"))?;
            Ok(Row::new()
                .with("index", i)
                .with("constructed", constructed)
                .with("r_before", r_invariant(&x, &y).norm())
                .with("z_norm", z.spin_norm())
                .with("r_after", r_invariant(&x, &(&y + &z)).norm()))
        })
        .collect::<Result<_, ExperimentError>>()?;
    let min_r = rows
        .iter()
        .filter_map(|r| match r.get("r_after") {
            Some(crate::report::Cell::Float(v)) => Some(*v),
            _ => None,
        })
        .fold(f64::INFINITY, f64::min);
    let failures = rows
        .iter()
        .filter(|r| {
            let get = |k| match r.get(k) {
                Some(crate::report::Cell::Float(v)) => *v,
                _ => f64::NAN,
            };
            !(get("z_norm") < cfg.eps && get("r_after") > DENSITY_R_FLOOR)
        })
        .count();
    report.checks = vec![
        Check::at_most("max_z_norm", max_of(&rows, "z_norm"), cfg.eps),
        Check::at_least("min_r_after", min_r, DENSITY_R_FLOOR),
        Check::at_most("failures", failures as f64, 0.0),
    ];
    report.details = json!({
        "constructed_pairs": rows.iter().filter(|r| r.get("constructed") == Some(&true.into())).count(),
        "failures": failures,
    });
    report.items = rows;
    Ok(())
}

pub fn details_field<'a>(report: &'a Report, key: &str) -> Option<&'a Value> {
    report.details.get(key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::IsometrySpec;

    fn cfg(command: Command) -> ExperimentConfig {
        ExperimentConfig::new(command)
    }

    #[test]
    fn orthogonal_small_dim_reports_truncation() {
        let mut c = cfg(Command::FixpointOrthogonal);
        c.dim = 48;
        c.isometry = IsometrySpec::CyclicShift(48);
        let r = run_experiment(&c).unwrap();
        assert!(r.all_pass(), "{:?}", r.checks);

        c.dim = 8;
        c.isometry = IsometrySpec::CyclicShift(8);
        let r = run_experiment(&c).unwrap();
        assert!(!r.all_pass());
    }

    #[test]
    fn sliver_without_root_has_no_failing_checks() {
        let mut c = cfg(Command::FixpointSliver);
        c.dim = 3;
        c.isometry = IsometrySpec::NegIdentity;
        let r = run_experiment(&c).unwrap();
        assert!(r.checks.is_empty());
        assert_eq!(details_field(&r, "witnessed"), Some(&Value::Bool(false)));
        assert!(!r.items.is_empty());
    }

    #[test]
    fn contraction_control_is_not_fixed_point_free() {
        let mut c = cfg(Command::Dynamics);
        c.t = 0.0;
        c.contraction = 0.9;
        c.samples = 2;
        c.max_iter = 50;
        let r = run_experiment(&c).unwrap();
        assert!(r.all_pass());
        assert_eq!(details_field(&r, "outcome"), Some(&Value::from("not_fixed_point_free")));
    }

    #[test]
    fn density_pairs_mix_constructed_and_random() {
        let (c0, x, y) = density_pair(3, 0, 4);
        assert!(c0 && r_invariant(&x, &y).norm() < 1e-14);
        assert!(!density_pair(3, 1, 4).0);
    }

    #[test]
    fn rejects_invalid_config() {
        let mut c = cfg(Command::Weakfp);
        c.t = 1.5;
        assert!(matches!(run_experiment(&c), Err(ExperimentError::Config(_))));
    }
}
