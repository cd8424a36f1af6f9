//! Command implementations: parse inputs, run the library, assemble report
//! documents.

use std::time::Instant;

use qhv_core::bell::{sandwich_report, seesaw_optimize, SeesawOptions};
use qhv_core::measure::{
    commuting_joint_probability, context_invariance_check, full_distribution_capped, mu_value,
    tomogram as rotated_probabilities, CylindricalEvent, SignedDistribution,
};
use qhv_core::report::{all_passed, Check};
use qhv_core::scenario::{
    build_nu_npartite_with, marginal_check, tv_bound_certificate_with, BuildOptions, ScenarioSpec,
};
use qhv_core::{tol, CoreError, DensityMatrix, Observable};

use crate::input;
use crate::output::{
    check_docs, BellReport, BoundReport, MeasureReport, PivotSummary, ScenarioReport, SeesawDoc,
    TermDoc, TomogramReport, TupleDeviation,
};
use crate::CliError;

fn input_err(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

pub fn measure(
    state_spec: &str,
    obs_specs: &[String],
    event_spec: Option<&str>,
    skip_invariance: bool,
    max_cells: Option<usize>,
) -> Result<MeasureReport, CliError> {
    let state = input::parse_state(state_spec)?;
    let observables: Vec<Observable> = obs_specs
        .iter()
        .map(|s| input::parse_observable(s))
        .collect::<Result<_, _>>()?;
    let cap = input::grid_cap(max_cells)?;
    for obs in &observables {
        if obs.dim() != state.dim() {
            return Err(input_err(format!(
                "observable dimension {} does not match state dimension {}",
                obs.dim(),
                state.dim()
            )));
        }
    }
    let event = event_spec
        .map(|spec| {
            let tuples = input::parse_event_tuples(spec)?;
            CylindricalEvent::new(observables.clone(), &tuples)
                .map_err(|e| input_err(format!("event: {e}")))
        })
        .transpose()?;

    let start = Instant::now();
    let dist = full_distribution_capped(&state, &observables, cap)?;
    let mut checks = vec![Check::deviation(
        "normalization",
        dist.sum() - 1.0,
        tol::NORMALIZATION_ABS,
    )];
    if let Some(dev) = commuting_comparison(&state, &observables, &dist)? {
        checks.push(Check::deviation(
            "commuting-product-equality",
            dev,
            tol::EQUALITY_ABS,
        ));
        checks.push(Check::lower(
            "commuting-nonnegative",
            dist.min_value(),
            0.0,
            1e-12,
        ));
    }
    if !skip_invariance {
        checks.push(context_invariance_check(&state, &observables)?);
    }
    let event_value = event.map(|e| mu_value(&state, &e)).transpose()?;

    let passed = all_passed(&checks);
    Ok(MeasureReport {
        command: "measure",
        dim: state.dim(),
        n_observables: observables.len(),
        axes: dist.axes().to_vec(),
        values: dist.values().to_vec(),
        sum: dist.sum(),
        total_variation: dist.total_variation(),
        min_value: dist.min_value(),
        event_value,
        checks: check_docs(&checks),
        passed,
        timing_ms: start.elapsed().as_millis(),
    })
}

/// When all observables commute the measure must be the ordinary joint
/// distribution; returns its largest cell deviation, or None when some pair
/// does not commute.
fn commuting_comparison(
    state: &DensityMatrix,
    observables: &[Observable],
    dist: &SignedDistribution,
) -> Result<Option<f64>, CliError> {
    let mut max_dev: f64 = 0.0;
    for flat in 0..dist.n_cells() {
        let idx = dist.unflatten(flat);
        let pairs: Vec<(Observable, Vec<f64>)> = observables
            .iter()
            .zip(&idx)
            .map(|(o, &i)| (o.clone(), vec![o.eigenvalues()[i]]))
            .collect();
        match commuting_joint_probability(state, &pairs) {
            Ok(p) => max_dev = max_dev.max((p - dist.values()[flat]).abs()),
            Err(CoreError::NonCommuting { .. }) => return Ok(None),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Some(max_dev))
}

pub fn scenario(
    state_spec: &str,
    settings_spec: &str,
    pivot: usize,
    all_pivots: bool,
    max_cells: Option<usize>,
) -> Result<ScenarioReport, CliError> {
    let settings = input::parse_settings(settings_spec)?;
    if settings.is_empty() {
        return Err(input_err("settings: need at least two sites"));
    }
    let n = settings.len();
    let d = settings[0][0].dim();
    if pivot >= n {
        return Err(input_err(format!(
            "pivot {pivot} out of range for {n} sites"
        )));
    }
    let state = input::parse_state(state_spec)?;
    let spec = ScenarioSpec::new(n, d, settings, state)
        .map_err(|e| input_err(format!("scenario: {e}")))?;
    let cap = input::grid_cap(max_cells)?;
    let options = BuildOptions {
        pivot,
        max_cells: cap,
    };

    let start = Instant::now();
    let dist = build_nu_npartite_with(&spec, options)?;
    let marginals = marginal_check(&dist)?;
    let certificate = tv_bound_certificate_with(&spec, options)?;

    let mut checks = vec![
        Check::deviation(
            "normalization",
            dist.table().sum() - 1.0,
            tol::NORMALIZATION_ABS,
        ),
        Check::deviation(
            "marginal-reproduction",
            marginals.max_abs_deviation,
            marginals.tolerance,
        ),
    ];
    checks.extend(certificate.checks.iter().cloned());

    let pivot_sweep = if all_pivots {
        let mut entries = Vec::with_capacity(n);
        for p in 0..n {
            let swept = build_nu_npartite_with(
                &spec,
                BuildOptions {
                    pivot: p,
                    max_cells: cap,
                },
            )?;
            let swept_marginals = marginal_check(&swept)?;
            checks.push(Check::deviation(
                format!("pivot-{p}-marginal-reproduction"),
                swept_marginals.max_abs_deviation,
                swept_marginals.tolerance,
            ));
            checks.push(Check::upper(
                format!("pivot-{p}-total-variation"),
                swept.total_variation(),
                spec.dimensional_bound(),
                tol::BOUND_SLACK_ABS,
            ));
            entries.push(PivotSummary {
                pivot: p,
                total_variation: swept.total_variation(),
                marginal_max_deviation: swept_marginals.max_abs_deviation,
            });
        }
        Some(entries)
    } else {
        None
    };

    let passed = all_passed(&checks);
    Ok(ScenarioReport {
        command: "scenario",
        n_sites: n,
        local_dim: d,
        pivot,
        axes: dist.table().axes().to_vec(),
        values: dist.table().values().to_vec(),
        sum: dist.table().sum(),
        total_variation: dist.total_variation(),
        marginal_max_deviation: marginals.max_abs_deviation,
        marginals: marginals
            .per_tuple
            .iter()
            .map(|(settings, dev)| TupleDeviation {
                settings: settings.clone(),
                max_deviation: *dev,
            })
            .collect(),
        per_site_factors: certificate.per_site_factors.clone(),
        closed_form_agreement: certificate.closed_form_agreement,
        product_bound: certificate.product_bound,
        dimensional_bound: certificate.dimensional_bound,
        pivot_sweep,
        checks: check_docs(&checks),
        passed,
        timing_ms: start.elapsed().as_millis(),
    })
}

fn validate_spectra(settings: &[[Observable; 2]]) -> Result<(), CliError> {
    for pair in settings {
        for obs in pair {
            let worst = obs
                .eigenvalues()
                .iter()
                .fold(0.0f64, |m, &v| m.max(v.abs()));
            if worst > 1.0 + tol::EQUALITY_ABS {
                return Err(input_err(format!(
                    "settings: observable spectrum reaches {worst}, outside [-1, 1]"
                )));
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn bell(
    functional_spec: &str,
    state_spec: &str,
    settings_spec: Option<&str>,
    optimize: bool,
    d_flag: Option<usize>,
    seed: u64,
    restarts: usize,
    sweeps: usize,
) -> Result<BellReport, CliError> {
    let functional = input::parse_functional(functional_spec)?;
    let state = input::parse_state(state_spec)?;
    let n = functional.n_sites();

    let start = Instant::now();
    let (spec, seesaw) = if optimize {
        let d = match (settings_spec, d_flag) {
            (_, Some(d)) => d,
            (Some(s), None) => {
                let parsed = input::parse_settings(s)?;
                if parsed.is_empty() {
                    return Err(input_err("settings: need at least two sites"));
                }
                parsed[0][0].dim()
            }
            (None, None) => return Err(input_err("--optimize needs --d or --settings")),
        };
        let options = SeesawOptions {
            seed,
            restarts,
            max_sweeps: sweeps,
            rel_tol: 1e-10,
        };
        let result = seesaw_optimize(&functional, &state, d, options).map_err(|e| match e {
            CoreError::DimensionMismatch { .. } | CoreError::InvalidArgument(_) => {
                input_err(format!("bell: {e}"))
            }
            other => other.into(),
        })?;
        let spec = ScenarioSpec::new(n, d, result.best_settings.clone(), state)?;
        let doc = SeesawDoc {
            best_value: result.best_value,
            sweeps: result.history.len(),
            restarts: result.restarts_run,
        };
        (spec, Some(doc))
    } else {
        let settings_spec =
            settings_spec.ok_or_else(|| input_err("provide --settings or use --optimize"))?;
        let settings = input::parse_settings(settings_spec)?;
        if settings.len() != n {
            return Err(input_err(format!(
                "functional spans {n} sites but settings cover {}",
                settings.len()
            )));
        }
        validate_spectra(&settings)?;
        let d = settings[0][0].dim();
        let spec = ScenarioSpec::new(n, d, settings, state)
            .map_err(|e| input_err(format!("bell: {e}")))?;
        (spec, None)
    };

    let (sandwich, _model) = sandwich_report(&spec, &functional)?;
    let mut checks = sandwich.violation.checks.clone();
    checks.extend(sandwich.checks.iter().cloned());

    let passed = all_passed(&checks);
    Ok(BellReport {
        command: "bell",
        functional: functional_spec.to_string(),
        n_sites: n,
        local_dim: spec.local_dim(),
        terms: functional
            .coefficients()
            .iter()
            .map(|(settings, &coefficient)| TermDoc {
                settings: settings.clone(),
                coefficient,
            })
            .collect(),
        classical_bound: sandwich.violation.classical_bound,
        quantum_value: sandwich.violation.quantum_value,
        ratio: sandwich.violation.ratio,
        upper_bound: sandwich.violation.upper_bound,
        total_variation: sandwich.total_variation,
        dimensional_bound: sandwich.dimensional_bound,
        optimized: optimize,
        seesaw,
        checks: check_docs(&checks),
        passed,
        timing_ms: start.elapsed().as_millis(),
    })
}

pub fn bound(d: usize, n: usize) -> Result<BoundReport, CliError> {
    let start = Instant::now();
    let upper = qhv_core::bell::upper_bound(d, n).map_err(|e| input_err(e.to_string()))?;
    Ok(BoundReport {
        command: "bound",
        local_dim: d,
        n_sites: n,
        dimensional_bound: (d as f64).powf((n as f64 - 1.0) / 2.0),
        setting_bound: 3.0f64.powi(n as i32 - 1),
        upper_bound: upper,
        passed: true,
        timing_ms: start.elapsed().as_millis(),
    })
}

pub fn tomogram(state_spec: &str, unitary_spec: &str) -> Result<TomogramReport, CliError> {
    let state = input::parse_state(state_spec)?;
    let u = input::parse_unitary(unitary_spec)?;
    if u.nrows() != state.dim() {
        return Err(input_err(format!(
            "unitary dimension {} does not match state dimension {}",
            u.nrows(),
            state.dim()
        )));
    }
    let start = Instant::now();
    let probabilities = rotated_probabilities(&state, &u)?;
    let sum: f64 = probabilities.iter().sum();
    let min = probabilities.iter().copied().fold(f64::INFINITY, f64::min);
    let checks = vec![
        Check::lower("probabilities-nonnegative", min, 0.0, 1e-12),
        Check::deviation("normalization", sum - 1.0, 1e-10),
    ];
    let passed = all_passed(&checks);
    Ok(TomogramReport {
        command: "tomogram",
        dim: state.dim(),
        probabilities,
        sum,
        min_probability: min,
        checks: check_docs(&checks),
        passed,
        timing_ms: start.elapsed().as_millis(),
    })
}
