//! Executes the checks of a scenario.

use std::sync::Arc;

use coupling_lab::circle::{approximation_convergence, corrected_limit_check, sobolev_growth_check, CircleGenerator};
use coupling_lab::h_half;
use coupling_lab::numerics::fourier::ModeCoefficients;
use coupling_lab::numerics::grid::{KGrid, TimeGrid};
use coupling_lab::numerics::linalg;
use coupling_lab::potential::{Coupling, SparseHermitian};
use coupling_lab::propagators::krein::evolve_krein;
use coupling_lab::propagators::minors::complex_k_expansion_check;
use coupling_lab::propagators::{EvolveOptions, Generator};
use coupling_lab::random;
use coupling_lab::report::{BoundReport, ReportRow, Status};
use coupling_lab::shortrange::{self, HalfLineParams, OscillatoryParams, ScaledCircleParams, ShortRangeModel};
use coupling_lab::spectral_limits::{self as sl, model31, remark1_defect};
use coupling_lab::transport::{self, CirclePotential};
use coupling_lab::{Error, Result};
use rayon::prelude::*;

use crate::config::{Calibration, CheckSpec, ModelSpec, ScenarioConfig};

/// Dense generator of a finite-dimensional model.
pub fn generator(model: &ModelSpec) -> Result<Generator> {
    match model {
        ModelSpec::Model2x2 { q } => Ok(model31(q.clone())),
        ModelSpec::Nxn { lambdas, toeplitz, pairs } => {
            let n = lambdas.len();
            let mut v = SparseHermitian::toeplitz(n, toeplitz);
            for p in pairs {
                if p.i == 0 || p.j == 0 || p.i > n || p.j > n || p.i == p.j {
                    return Err(Error::Invalid(format!("pair ({}, {}) outside 1..={n} or diagonal", p.i, p.j)));
                }
                v.couplings.push(Coupling { row: p.i - 1, col: p.j - 1, profile: p.q.clone() });
            }
            Generator::unordered(lambdas.clone(), Arc::new(v))
        }
        other => Err(Error::Invalid(format!("model {} has no matrix generator", other.id()))),
    }
}

fn circle_generator(model: &ModelSpec) -> Result<CircleGenerator> {
    match model {
        ModelSpec::CircleSchrodinger { n_max, modes, symbol } => CircleGenerator::with_symbol(*n_max, CirclePotential::new(modes.clone()), *symbol),
        other => Err(Error::Invalid(format!("model {} is not a circle model", other.id()))),
    }
}

fn shortrange_model(model: &ModelSpec) -> Result<ShortRangeModel> {
    match model {
        ModelSpec::Shortrange { v, gamma, alpha, n_max, spectrum } => Ok(ShortRangeModel::new(v.clone(), *gamma, *alpha, *n_max)?.with_spectrum(*spectrum)),
        other => Err(Error::Invalid(format!("model {} is not a short-range model", other.id()))),
    }
}

/// Resolved data shared by the checks of one scenario.
struct Context<'a> {
    cfg: &'a ScenarioConfig,
    opts: EvolveOptions,
}

impl Context<'_> {
    fn model(&self) -> Result<&ModelSpec> {
        self.cfg.model.as_ref().ok_or_else(|| Error::Invalid("scenario has no model".into()))
    }

    fn kgrid(&self) -> Result<KGrid> {
        self.cfg.kgrid.as_ref().map(|k| k.build()).ok_or_else(|| Error::Invalid("scenario has no k grid".into()))
    }

    fn t_max(&self) -> Result<f64> {
        self.cfg.time.as_ref().map(|t| t.t_max).ok_or_else(|| Error::Invalid("scenario has no time".into()))
    }

    fn times(&self) -> Result<Vec<f64>> {
        self.cfg.time.as_ref().map(|t| t.snapshots()).ok_or_else(|| Error::Invalid("scenario has no time".into()))
    }

    /// Constant of a calibrated check, from a value or a calibration run.
    fn calibrate(&self, c: &Option<Calibration>, run: impl Fn(&ModelSpec) -> Result<BoundReport>) -> Result<Option<f64>> {
        match c {
            None => Ok(None),
            Some(Calibration { value: Some(v), .. }) => Ok(Some(*v)),
            Some(Calibration { model: Some(m), .. }) => {
                let r = run(m)?;
                Ok(Some(r.fitted_constant.unwrap_or(0.0)))
            }
            Some(_) => Err(Error::Invalid("calibration needs `value` or `model`".into())),
        }
    }
}

fn unitarity(ctx: &Context) -> Result<BoundReport> {
    let tol = ctx.cfg.tolerance("unitarity");
    let kgrid = ctx.kgrid()?;
    let t = ctx.t_max()?;
    let grid = TimeGrid::new(vec![0.0, t])?;
    let model = ctx.model()?;
    let rows: Vec<(ReportRow, f64)> = match model {
        ModelSpec::Krein { q } => kgrid
            .samples()
            .par_iter()
            .map(|&k| Ok((ReportRow { param: k, lhs: linalg::j_defect(&evolve_krein(q, k, &grid, &ctx.opts)?), rhs: tol }, 0.0)))
            .collect::<Result<_>>()?,
        _ => {
            let g = generator(model)?;
            let two = matches!(model, ModelSpec::Model2x2 { .. });
            let props = sl::sweep(&g, &kgrid, &grid, &ctx.opts)?;
            props
                .iter()
                .zip(kgrid.samples())
                .map(|(p, &k)| {
                    let sym = if two { remark1_defect(p.last(), k, t) } else { 0.0 };
                    (ReportRow { param: k, lhs: p.unitarity_defect, rhs: tol }, sym)
                })
                .collect()
        }
    };
    let worst = rows.iter().map(|r| r.0.lhs).fold(0.0, f64::max);
    let sym = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let unit = BoundReport::upper("unitarity_defect", worst, tol).with_rows(rows.iter().map(|r| r.0).collect());
    Ok(BoundReport::combine("unitarity", vec![unit, BoundReport::upper("symmetry", sym, tol)]).with_tolerance("unitarity", tol))
}

fn corpus_function(name: &str, samples: usize) -> Result<h_half::CircleFunctionSamples> {
    h_half::corpus(samples)?
        .into_iter()
        .find(|(n, _)| n == name)
        .map(|(_, f)| f)
        .ok_or_else(|| Error::Invalid(format!("unknown corpus function `{name}`")))
}

/// Runs one check. Numerical failures come back as errors.
pub fn run_check(cfg: &ScenarioConfig, check: &CheckSpec) -> Result<BoundReport> {
    let ctx = Context { cfg, opts: cfg.integrator };
    let opts = &ctx.opts;
    use CheckSpec::*;
    match check {
        Unitarity => unitarity(&ctx),
        UnitaritySuite { count } => random::unitarity_suite_check(cfg.seed, *count, cfg.tolerance("unitarity"), opts),
        AdjugateContraction { count, dim } => {
            Ok(random::adjugate_contraction_check(cfg.seed, *count, *dim, cfg.tolerance("adjugate")))
        }
        Rotation { eps, t } => sl::rotation_check(*eps, *t, cfg.tolerance("rotation"), opts),
        TraceFormula => sl::trace_formula_check(&generator(ctx.model()?)?, &ctx.kgrid()?, ctx.t_max()?, opts),
        WeakL1 { calibration } => {
            let (kg, t) = (ctx.kgrid()?, ctx.t_max()?);
            let cal = ctx.calibrate(calibration, |m| sl::weak_l1_check(&generator(m)?, &kg, t, None, opts))?;
            sl::weak_l1_check(&generator(ctx.model()?)?, &kg, t, cal, opts)
        }
        LowerBoundImaginary { ys } => sl::lemma2b_check(&generator(ctx.model()?)?, ys, ctx.t_max()?, opts),
        ComplexKExpansion { j, ys } => complex_k_expansion_check(&generator(ctx.model()?)?, *j, ctx.t_max()?, ys, opts),
        DeterminantFlow { j } => sl::determinant_flow_check(&generator(ctx.model()?)?, *j, &ctx.kgrid()?, &ctx.times()?, opts),
        DiagonalLimit { j } => {
            sl::diagonal_limit_check(&generator(ctx.model()?)?, *j, &ctx.kgrid()?, &ctx.times()?, cfg.tolerance("diagonal_budget"), opts)
        }
        DegeneratePair { j, calibration } => {
            let (kg, times) = (ctx.kgrid()?, ctx.times()?);
            let cal = ctx.calibrate(calibration, |m| sl::degenerate_pair_check(&generator(m)?, *j, &kg, &times, None, opts))?;
            sl::degenerate_pair_check(&generator(ctx.model()?)?, *j, &kg, &times, cal, opts)
        }
        ColumnTail { column, cutoff, calibration } => {
            let (kg, t) = (ctx.kgrid()?, ctx.t_max()?);
            let cal = ctx.calibrate(calibration, |m| sl::column_tail_check(&generator(m)?, *column, *cutoff, &kg, t, None, opts))?;
            sl::column_tail_check(&generator(ctx.model()?)?, *column, *cutoff, &kg, t, cal, opts)
        }
        Plancherel => match ctx.model()? {
            ModelSpec::Transport { modes } => transport::plancherel_modes_check(&CirclePotential::new(modes.clone()), ctx.t_max()?, &ctx.kgrid()?),
            _ => unreachable!("validated"),
        },
        InstructiveJ0 { amplitudes } => transport::instructive_j0_check(amplitudes, cfg.tolerance("j0")),
        TransportLimit { exponentiated, n_out } => match ctx.model()? {
            ModelSpec::Transport { modes } => {
                transport::limit_convergence_check(&CirclePotential::new(modes.clone()), &ctx.kgrid()?, &ctx.times()?, *exponentiated, *n_out)
            }
            _ => unreachable!("validated"),
        },
        CorrectedLimit { psi0 } => {
            let g = circle_generator(ctx.model()?)?;
            corrected_limit_check(&g, &ctx.kgrid()?, &ctx.times()?, &initial_state(psi0), opts)
        }
        SobolevGrowth { gamma, cutoffs, calibration } => {
            let (kg, t) = (ctx.kgrid()?, ctx.t_max()?);
            let cal = ctx.calibrate(calibration, |m| sobolev_growth_check(&circle_generator(m)?, &kg, t, *gamma, &[], None, opts))?;
            sobolev_growth_check(&circle_generator(ctx.model()?)?, &kg, t, *gamma, cutoffs, cal, opts)
        }
        Approximation { k, n_list } => {
            let g = circle_generator(ctx.model()?)?;
            approximation_convergence(&g, *k, ctx.t_max()?, n_list, &ModeCoefficients::delta(0, 0), opts)
        }
        ShortrangeSobolev { s } => shortrange::sobolev_sup_check(&shortrange_model(ctx.model()?)?, &ctx.kgrid()?, ctx.t_max()?, *s, opts),
        Analyticity { k, l_list } => shortrange::analyticity_decay_check(&shortrange_model(ctx.model()?)?, *k, ctx.t_max()?, l_list, opts),
        SnLp { n_list, p_list, two_sided } => {
            let ps: Vec<f64> = p_list.iter().map(|p| if *p == 0.0 { f64::INFINITY } else { *p }).collect();
            shortrange::sn_lp_check(&shortrange_model(ctx.model()?)?, n_list, &ps, ctx.t_max()?, &ctx.kgrid()?, *two_sided, opts)
        }
        MuL2 { a, b, cells } => shortrange::mu_l2_check(&shortrange_model(ctx.model()?)?, *a, *b, *cells, ctx.t_max()?),
        L1Loc { a, b, cells } => shortrange::l1_loc_check(&shortrange_model(ctx.model()?)?, *a, *b, *cells, ctx.t_max()?, opts),
        WkbBernstein { t_list, alpha, gamma, amp, ks } => {
            let p = ScaledCircleParams { t_list: t_list.clone(), alpha: *alpha, gamma: *gamma, amp: *amp, ks: ks.clone() };
            shortrange::wkb_bernstein_check(&p, opts)
        }
        Oscillatory { t_list, alpha, gamma, amp, c_band, s_max, ds } => {
            let p = OscillatoryParams { t_list: t_list.clone(), alpha: *alpha, gamma: *gamma, amp: *amp, c_band: *c_band, s_max: *s_max, ds: *ds };
            shortrange::oscillatory_check(&p, opts)
        }
        HalflineLocalization { t_list, k_max, dk, k_loc, d_ladder, snapshots } => match ctx.model()? {
            ModelSpec::HalflineTransport { alpha, gamma, amp, shape } => {
                let p = HalfLineParams {
                    t_list: t_list.clone(),
                    alpha: *alpha,
                    gamma: *gamma,
                    amp: *amp,
                    shape: shape.clone(),
                    k_max: *k_max,
                    dk: *dk,
                    k_loc: k_loc.clone(),
                    d_ladder: d_ladder.clone(),
                    snapshots: *snapshots,
                };
                shortrange::halfline_localization(&p, opts)
            }
            _ => unreachable!("validated"),
        },
        HHalfEquivalence { samples } => h_half::equivalence_check(&h_half::corpus(*samples)?, cfg.tolerance("equivalence_band")),
        ExpMap { function, ladder, samples } => h_half::exp_map_bound_check(&corpus_function(function, *samples)?, ladder),
        UnimodularExp { function, eps_ladder, n_list, samples } => {
            h_half::unimodular_exp_check(&corpus_function(function, *samples)?, eps_ladder, n_list)
        }
    }
}

fn initial_state(psi0: &[crate::config::ModeValue]) -> ModeCoefficients {
    if psi0.is_empty() {
        return ModeCoefficients::delta(0, 0);
    }
    let n_max = psi0.iter().map(|m| m.n.unsigned_abs() as usize).max().unwrap_or(0);
    let mut c = ModeCoefficients::zeros(n_max);
    for m in psi0 {
        c.set(m.n, c.get(m.n) + m.value);
    }
    c
}

/// Result of one check inside a scenario.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub check: String,
    pub report: BoundReport,
}

/// Runs every check in order. Numerical errors become INCONCLUSIVE reports.
pub fn run_scenario(cfg: &ScenarioConfig) -> Vec<CheckOutcome> {
    cfg.checks
        .iter()
        .map(|c| {
            let report = run_check(cfg, c).unwrap_or_else(|e| {
                BoundReport::new(c.name(), f64::NAN, f64::NAN, Status::Inconclusive).with_note(format!("error: {e}"))
            });
            CheckOutcome { check: c.name(), report }
        })
        .collect()
}

/// PASS and INFORMATIONAL count as success.
pub fn succeeded(outcomes: &[CheckOutcome]) -> bool {
    outcomes.iter().all(|o| matches!(o.report.status, Status::Pass | Status::Informational))
}
