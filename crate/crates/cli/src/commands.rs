//! Subcommand bodies, generic over the working precision.

use std::fmt;

use anyhow::{anyhow, bail, Result};
use rdeid::conditioning::{
    bound_diagnostics, condition_sweep, lagrange_bound_constant, theta_bounds, SweepPoint,
};
use rdeid::esprit::recovery_sweep;
use rdeid::expmodel::ExponentialModel;
use rdeid::numkernel::Real;
use rdeid::pde::{
    measure, run_pipeline, simulate, MeasurementFilter, PdeConfig, PipelineConfig, StencilOrder,
};
use rdeid::spectral::{estimate_gap_constants, SturmLiouvilleProblem};

use crate::config::Settings;
use crate::output::{format_f64, format_real, Table};

/// Sweep points where no result could be computed. Outputs are still
/// written; the process exits with status 2.
#[derive(Debug)]
pub struct Breakdown {
    pub points: Vec<(String, String)>,
}

impl fmt::Display for Breakdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "numerical breakdown at {} point(s):", self.points.len())?;
        for (at, why) in &self.points {
            write!(f, "\n  {at}: {why}")?;
        }
        Ok(())
    }
}

impl std::error::Error for Breakdown {}

/// Tables to write plus any breakdowns met on the way.
pub struct Outcome {
    pub tables: Vec<Table>,
    pub breakdowns: Vec<(String, String)>,
}

fn num<R: Real>(name: &str, s: &str) -> Result<R> {
    R::parse_decimal(s).map_err(|e| anyhow!("{name}: {e}"))
}

fn nums<R: Real>(name: &str, v: &[String]) -> Result<Vec<R>> {
    v.iter().map(|s| num(name, s)).collect()
}

fn model<R: Real>(s: &Settings) -> Result<ExponentialModel<R>> {
    let rates = nums::<R>("rates", &s.rates)?;
    let amps = nums::<R>("amplitudes", &s.amplitudes)?;
    ExponentialModel::from_lists(&rates, &amps, s.n1, num("epsilon", &s.epsilon)?)
        .map_err(|e| anyhow!("invalid model: {e}"))
}

/// `delta_min + i (delta_max - delta_min) / (steps - 1)`, computed at the
/// working precision.
pub fn delta_grid<R: Real>(s: &Settings) -> Result<Vec<R>> {
    let lo: R = num("delta_min", &s.delta_min)?;
    let hi: R = num("delta_max", &s.delta_max)?;
    if s.delta_steps == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi - &lo) / R::from_usize(s.delta_steps - 1);
    Ok((0..s.delta_steps)
        .map(|i| lo.clone() + R::from_usize(i) * &step)
        .collect())
}

fn delta_label<R: Real>(d: &R) -> String {
    format!("Delta = {}", format_real(d))
}

pub fn condition<R: Real>(s: &Settings) -> Result<Outcome> {
    let model = model::<R>(s)?;
    let deltas = delta_grid::<R>(s)?;
    let sweep = condition_sweep(&model, &deltas);
    let mut table = Table::new(
        "condition",
        &[
            "delta[time]",
            "n",
            "K_y[amplitude]",
            "K_lambda[1/time]",
            "route",
            "reliable",
            "route_disagreement[1]",
            "jacobian_condition[1]",
        ],
    );
    let mut breakdowns = Vec::new();
    for point in &sweep {
        let Some(report) = point.best() else {
            breakdowns.push((delta_label(&point.delta), sweep_failure(point)));
            continue;
        };
        let disagreement = point
            .disagreement
            .as_ref()
            .map(format_real)
            .unwrap_or_default();
        let cond = point
            .linear
            .as_ref()
            .ok()
            .and_then(|r| r.jacobian_condition.as_ref())
            .map(format_real)
            .unwrap_or_default();
        for n in 0..model.n1() {
            table.push(vec![
                format_real(&point.delta),
                (n + 1).to_string(),
                format_real(&report.k_y[n]),
                format_real(&report.k_lambda[n]),
                report.route.as_str().into(),
                point.reliable.to_string(),
                disagreement.clone(),
                cond.clone(),
            ]);
        }
    }
    Ok(Outcome {
        tables: vec![table],
        breakdowns,
    })
}

fn sweep_failure<R: Real>(point: &SweepPoint<R>) -> String {
    let describe = |e: Option<String>| e.unwrap_or_else(|| "ok".into());
    format!(
        "closed form: {}; linear solve: {}",
        describe(point.closed.as_ref().err().map(ToString::to_string)),
        describe(point.linear.as_ref().err().map(ToString::to_string))
    )
}

pub fn esprit<R: Real>(s: &Settings) -> Result<Outcome> {
    let model = model::<R>(s)?;
    if model.epsilon().is_zero() {
        bail!("rescaled errors need epsilon > 0");
    }
    let deltas = delta_grid::<R>(s)?;
    let fits = recovery_sweep(&model, &deltas);
    let sweep = condition_sweep(&model, &deltas);
    let mut table = Table::new(
        "esprit",
        &[
            "delta[time]",
            "n",
            "lambda_true[1/time]",
            "lambda_est[1/time]",
            "y_true[amplitude]",
            "y_est[amplitude]",
            "E_lambda[1/time]",
            "E_y[amplitude]",
            "K_lambda[1/time]",
            "K_y[amplitude]",
            "reliable",
        ],
    );
    let mut breakdowns = Vec::new();
    for ((delta, fit), point) in deltas.iter().zip(&fits).zip(&sweep) {
        let fit = match fit {
            Ok(f) => f,
            Err(e) => {
                breakdowns.push((delta_label(delta), e.to_string()));
                continue;
            }
        };
        let (Some(el), Some(ey)) = (&fit.rate_errors, &fit.amplitude_errors) else {
            bail!("rescaled errors missing at {}", delta_label(delta));
        };
        let report = point.best();
        for n in 0..model.n1() {
            let k = |pick: fn(&rdeid::conditioning::ConditionReport<R>) -> &Vec<R>| {
                report.map(|r| format_real(&pick(r)[n])).unwrap_or_default()
            };
            let truth = &model.main()[n];
            table.push(vec![
                format_real(delta),
                (n + 1).to_string(),
                format_real(&truth.rate),
                format_real(&fit.rates[n]),
                format_real(&truth.amplitude),
                format_real(&fit.amplitudes[n]),
                format_real(&el[n]),
                format_real(&ey[n]),
                k(|r| &r.k_lambda),
                k(|r| &r.k_y),
                point.reliable.to_string(),
            ]);
        }
    }
    Ok(Outcome {
        tables: vec![table],
        breakdowns,
    })
}

pub fn bounds<R: Real>(s: &Settings) -> Result<Outcome> {
    let model = model::<R>(s)?;
    let n1 = model.n1();
    let eigs: Vec<R> = model
        .main()
        .iter()
        .chain(model.tail())
        .map(|m| m.rate.clone())
        .collect();
    let gaps = estimate_gap_constants(&eigs).map_err(|e| anyhow!("gap constants: {e}"))?;
    let deltas = delta_grid::<R>(s)?;
    let m_phi = lagrange_bound_constant(&gaps.lower, &deltas[0])
        .map_err(|e| anyhow!("Lagrange bound constant: {e}"))?;
    let mut table = Table::new(
        "bounds",
        &[
            "delta[time]",
            "n",
            "xi1[1]",
            "xi2[1]",
            "xi3[1]",
            "xi4[1]",
            "theta1[1]",
            "theta2[1]",
            "theta3[1]",
            "Theta[1]",
            "sigma[1]",
            "lagrange_sq[1]",
            "lagrange_scaled[1]",
            "M_phi[1]",
            "xi4_scaled[time]",
            "identity_error[1]",
            "theta_bounds_hold",
            "lagrange_bound_holds",
        ],
    );
    let mut breakdowns = Vec::new();
    for delta in &deltas {
        for n in 1..=n1 {
            let at = format!("{}, n = {n}", delta_label(delta));
            let d = match bound_diagnostics(&eigs, n, n1, delta) {
                Ok(d) => d,
                Err(e) => {
                    breakdowns.push((at, e.to_string()));
                    continue;
                }
            };
            let theta_ok = match theta_bounds(n, n1, delta, &gaps) {
                Ok(b) => b.contains(&d).to_string(),
                Err(e) => {
                    breakdowns.push((at, e.to_string()));
                    continue;
                }
            };
            let scaled = d.lagrange_scaled(&gaps.lower);
            // The Lagrange bound is stated for n < N1 only.
            let lagrange_ok = if n < n1 {
                (scaled <= m_phi).to_string()
            } else {
                String::new()
            };
            table.push(vec![
                format_real(delta),
                n.to_string(),
                format_real(&d.xi1),
                format_real(&d.xi2),
                format_real(&d.xi3),
                format_real(&d.xi4),
                format_real(&d.theta1),
                format_real(&d.theta2),
                format_real(&d.theta3),
                format_real(&d.big_theta),
                d.sigma.to_string(),
                format_real(&d.lagrange_sq),
                format_real(&scaled),
                format_real(&m_phi),
                format_real(&d.xi4_scaled),
                format_real(&d.identity_error()),
                theta_ok,
                lagrange_ok,
            ]);
        }
    }
    Ok(Outcome {
        tables: vec![table],
        breakdowns,
    })
}

fn pde_config<R: Real>(s: &Settings) -> Result<PdeConfig<R>> {
    let p: R = num("p", &s.p)?;
    let q: R = num("q", &s.q)?;
    let mut cfg = PdeConfig::<R>::reference();
    cfg.problem =
        SturmLiouvilleProblem::constant(p, q).map_err(|e| anyhow!("invalid coefficients: {e}"))?;
    cfg.nx = s.nx;
    cfg.order = if s.order == 2 {
        StencilOrder::Second
    } else {
        StencilOrder::Fourth
    };
    cfg.horizon = num("horizon", &s.horizon)?;
    cfg.initial_modes = rdeid::pde::reference_initial_modes(s.nx);
    if s.n1 + s.n2 > s.nx {
        bail!(
            "n1 + n2 = {} exceeds the {} resolved modes",
            s.n1 + s.n2,
            s.nx
        );
    }
    Ok(cfg)
}

fn filter_table<R: Real>(filter: &MeasurementFilter<R>) -> Table {
    let mut t = Table::new("filter", &["n", "c_n[1]", "weight[1]", "part"]);
    for (n, c) in filter.coefficients.iter().enumerate() {
        t.push(vec![
            (n + 1).to_string(),
            format_real(c),
            format_real(&filter.weight(n)),
            if n < filter.n1 { "main" } else { "tail" }.into(),
        ]);
    }
    t
}

pub fn simulate_cmd<R: Real>(s: &Settings) -> Result<Outcome> {
    let cfg = pde_config::<R>(s)?;
    let field = match simulate(&cfg) {
        Ok(f) => f,
        Err(e) => {
            return Ok(Outcome {
                tables: Vec::new(),
                breakdowns: vec![("simulation".into(), e.to_string())],
            })
        }
    };
    if field.order != cfg.order {
        log::warn!("stencil fell back to order {}", field.order.as_usize());
    }
    let filter = MeasurementFilter::seeded(s.n1, s.n2, num("epsilon", &s.epsilon)?, s.seed)
        .map_err(|e| anyhow!("filter: {e}"))?;
    let snap_step = cfg.horizon.clone() / R::from_usize(s.snapshots - 1);
    let snap_times: Vec<R> = (0..s.snapshots)
        .map(|i| R::from_usize(i) * &snap_step)
        .collect();
    let mut fields = Table::new("field", &["t[time]", "x[length]", "z[state]"]);
    for (t, z) in snap_times.iter().zip(field.snapshots(&snap_times)) {
        for (x, v) in field.grid.iter().zip(&z) {
            fields.push(vec![format_real(t), format_real(x), format_real(v)]);
        }
    }
    let step = cfg.horizon.clone() / R::from_usize(s.samples - 1);
    let times: Vec<R> = (0..s.samples).map(|k| R::from_usize(k) * &step).collect();
    let y = measure(&field, &filter, &times);
    let mut series = Table::new("measurements", &["t[time]", "y[state*length]"]);
    for (t, v) in times.iter().zip(&y) {
        series.push(vec![format_real(t), format_real(v)]);
    }
    let mut modes = Table::new("modes", &["n", "lambda[1/time]", "z_n0[state]"]);
    for (n, (rate, a)) in field
        .rates
        .iter()
        .zip(&field.coefficients)
        .enumerate()
        .take(s.n1 + s.n2)
    {
        modes.push(vec![(n + 1).to_string(), format_real(rate), format_real(a)]);
    }
    Ok(Outcome {
        tables: vec![fields, series, modes, filter_table(&filter)],
        breakdowns: Vec::new(),
    })
}

pub fn pipeline<R: Real>(s: &Settings) -> Result<Outcome> {
    let pde = pde_config::<R>(s)?;
    let p_true: R = num("p", &s.p)?;
    let q_true: R = num("q", &s.q)?;
    let cfg = PipelineConfig {
        pde,
        n1: s.n1,
        n2: s.n2,
        epsilon: num("epsilon", &s.epsilon)?,
        samples: s.samples,
        seed: s.seed,
        strides: (s.stride_min..=s.stride_max).collect(),
    };
    let result = match run_pipeline(&cfg) {
        Ok(r) => r,
        Err(rdeid::pde::PdeError::InvalidConfig(msg)) => {
            bail!("invalid pipeline configuration: {msg}")
        }
        Err(e) => {
            return Ok(Outcome {
                tables: Vec::new(),
                breakdowns: vec![("pipeline".into(), e.to_string())],
            })
        }
    };
    let mut errors = Table::new(
        "pipeline",
        &[
            "stride",
            "delta[time]",
            "n",
            "lambda_true[1/time]",
            "lambda_est[1/time]",
            "relative_error[1]",
            "y_est[state*length]",
            "z_n0_est[state]",
            "status",
        ],
    );
    let mut pq = Table::new(
        "pq",
        &[
            "stride",
            "delta[time]",
            "p_est[length^2/time]",
            "q_est[1/time]",
            "p_relative_error[1]",
            "q_relative_error[1]",
        ],
    );
    let mut breakdowns = Vec::new();
    let rel = |est: &R, truth: &R| {
        if truth.is_zero() {
            est.abs()
        } else {
            (est.clone() - truth).abs() / truth.abs()
        }
    };
    for point in &result.points {
        let stride = point.stride.to_string();
        let delta = format_real(&point.delta);
        match &point.outcome {
            Ok(fit) => {
                for n in 0..s.n1 {
                    errors.push(vec![
                        stride.clone(),
                        delta.clone(),
                        (n + 1).to_string(),
                        format_real(&result.true_rates[n]),
                        format_real(&fit.rates[n]),
                        format_real(&fit.relative_errors[n]),
                        format_real(&fit.amplitudes[n]),
                        format_real(&fit.modes[n]),
                        "ok".into(),
                    ]);
                }
                pq.push(vec![
                    stride,
                    delta,
                    format_real(&fit.p_hat),
                    format_real(&fit.q_hat),
                    format_real(&rel(&fit.p_hat, &p_true)),
                    format_real(&rel(&fit.q_hat, &q_true)),
                ]);
            }
            Err(e) => {
                let reason = e.to_string();
                errors.push(vec![
                    stride.clone(),
                    delta.clone(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    reason.clone(),
                ]);
                breakdowns.push((
                    format!("stride {stride}, {}", delta_label(&point.delta)),
                    reason,
                ));
            }
        }
    }
    for n in 0..s.n1 {
        if let Some((point, fit)) = result.best(n) {
            log::info!(
                "lambda_{}: best relative error {} at Delta = {}",
                n + 1,
                format_f64(fit.relative_errors[n].to_f64()),
                format_real(&point.delta)
            );
        }
    }
    Ok(Outcome {
        tables: vec![errors, pq, filter_table(&result.filter)],
        breakdowns,
    })
}
