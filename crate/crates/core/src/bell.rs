//! Correlation Bell functionals, their quantum evaluation, and the
//! dimensional violation bound.
//!
//! A functional here is a linear combination of full N site correlators,
//! one setting chosen per site, with observables normalized to spectra in
//! [-1, 1]. Its violation ratio is |quantum value| / classical bound. The
//! local signed models of `scenario` reproduce every correlator while their
//! weights sum to at most d^((N-1)/2) in absolute value, so the ratio can
//! never exceed min(d^((N-1)/2), 3^(N-1)); `sandwich_report` checks the full
//! chain ratio <= total variation <= d^((N-1)/2) on concrete instances.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::error::CoreError;
use crate::operator::{
    kron, spectral_decompose, trace_product, Complex64, ComplexMatrix, DensityMatrix,
    HermitianOperator, Observable,
};
use crate::presets;
use crate::report::Check;
use crate::scenario::{build_nu_npartite, ScenarioDistribution, ScenarioSpec};
use crate::tol;
use crate::Result;

/// A linear form in the full correlators of an N site, two settings per
/// site scenario. Keys are setting tuples with zero-based entries; the
/// classical bound is the maximum of |form| over deterministic +-1
/// assignments.
#[derive(Clone, Debug, PartialEq)]
pub struct BellFunctional {
    n_sites: usize,
    coefficients: BTreeMap<Vec<u8>, f64>,
    classical_bound: f64,
}

impl BellFunctional {
    pub fn new(
        n_sites: usize,
        coefficients: BTreeMap<Vec<u8>, f64>,
        classical_bound: f64,
    ) -> Result<Self> {
        if n_sites < 1 {
            return Err(CoreError::InvalidArgument(
                "a functional needs at least one site".into(),
            ));
        }
        if coefficients.is_empty() {
            return Err(CoreError::InvalidArgument(
                "a functional needs at least one term".into(),
            ));
        }
        for (tuple, c) in &coefficients {
            if tuple.len() != n_sites {
                return Err(CoreError::DimensionMismatch {
                    expected: n_sites,
                    found: tuple.len(),
                });
            }
            if tuple.iter().any(|&t| t > 1) {
                return Err(CoreError::InvalidArgument(format!(
                    "setting indices must be 0 or 1, got {tuple:?}"
                )));
            }
            if !c.is_finite() {
                return Err(CoreError::InvalidArgument(
                    "coefficients must be finite".into(),
                ));
            }
        }
        if !(classical_bound > 0.0 && classical_bound.is_finite()) {
            return Err(CoreError::InvalidArgument(
                "classical bound must be positive and finite".into(),
            ));
        }
        Ok(Self {
            n_sites,
            coefficients,
            classical_bound,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn coefficients(&self) -> &BTreeMap<Vec<u8>, f64> {
        &self.coefficients
    }

    pub fn classical_bound(&self) -> f64 {
        self.classical_bound
    }

    /// Maximum of |form| over all deterministic +-1 outcome assignments,
    /// exhaustively. Exponential in the number of sites; meant for
    /// validating bounds on small instances.
    pub fn classical_bound_brute_force(&self) -> f64 {
        let n = self.n_sites;
        let mut best: f64 = 0.0;
        // two signs per site, one for each setting
        for assign in 0..(1usize << (2 * n)) {
            let sign = |site: usize, setting: u8| -> f64 {
                if assign >> (2 * site + setting as usize) & 1 == 0 {
                    1.0
                } else {
                    -1.0
                }
            };
            let mut value = 0.0;
            for (tuple, c) in &self.coefficients {
                let mut prod = *c;
                for (site, &t) in tuple.iter().enumerate() {
                    prod *= sign(site, t);
                }
                value += prod;
            }
            best = best.max(value.abs());
        }
        best
    }
}

/// The two setting, two site functional A1 B1 + A1 B2 + A2 B1 - A2 B2 with
/// classical bound 2.
pub fn chsh() -> BellFunctional {
    let mut coefficients = BTreeMap::new();
    coefficients.insert(vec![0, 0], 1.0);
    coefficients.insert(vec![0, 1], 1.0);
    coefficients.insert(vec![1, 0], 1.0);
    coefficients.insert(vec![1, 1], -1.0);
    BellFunctional {
        n_sites: 2,
        coefficients,
        classical_bound: 2.0,
    }
}

/// The Mermin-Klyshko functional on n sites, built by the recursion
/// B_n = (1/2)[B_{n-1}(A_n + A_n') + B'_{n-1}(A_n - A_n')] from B_1 = 2 A_1,
/// where priming swaps the two settings everywhere. Classical bound 2 for
/// every n; at n = 2 the coefficients reduce to the CHSH form exactly.
pub fn mermin_klyshko(n_sites: usize) -> Result<BellFunctional> {
    if n_sites < 2 {
        return Err(CoreError::InvalidArgument(
            "the recursion needs at least 2 sites".into(),
        ));
    }
    let mut coefficients: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
    coefficients.insert(vec![0], 2.0);
    for _ in 2..=n_sites {
        let swapped = |t: &[u8]| -> Vec<u8> { t.iter().map(|&b| 1 - b).collect() };
        // a zero coefficient can still contribute through its swapped
        // partner, so extend over both
        let tuples: BTreeSet<Vec<u8>> = coefficients
            .keys()
            .flat_map(|t| [t.clone(), swapped(t)])
            .collect();
        let mut next: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
        for tuple in &tuples {
            let c = coefficients.get(tuple).copied().unwrap_or(0.0);
            let cp = coefficients.get(&swapped(tuple)).copied().unwrap_or(0.0);
            for (setting, value) in [(0u8, 0.5 * (c + cp)), (1u8, 0.5 * (c - cp))] {
                if value != 0.0 {
                    let mut t = tuple.clone();
                    t.push(setting);
                    next.insert(t, value);
                }
            }
        }
        coefficients = next;
    }
    Ok(BellFunctional {
        n_sites,
        coefficients,
        classical_bound: 2.0,
    })
}

/// Ratio bound min(d^((N-1)/2), 3^(N-1)) on |quantum| / classical for any
/// correlation functional measured with d dimensional sites.
pub fn upper_bound(local_dim: usize, n_sites: usize) -> Result<f64> {
    if local_dim < 2 || n_sites < 2 {
        return Err(CoreError::InvalidArgument(format!(
            "bound needs d >= 2 and N >= 2, got d = {local_dim}, N = {n_sites}"
        )));
    }
    let dimensional = (local_dim as f64).powf((n_sites as f64 - 1.0) / 2.0);
    let setting_count = 3.0f64.powi(n_sites as i32 - 1);
    Ok(dimensional.min(setting_count))
}

fn validate_settings(
    functional: &BellFunctional,
    settings: &[[Observable; 2]],
) -> Result<usize> {
    if settings.len() != functional.n_sites {
        return Err(CoreError::DimensionMismatch {
            expected: functional.n_sites,
            found: settings.len(),
        });
    }
    let d = settings[0][0].dim();
    for pair in settings {
        for obs in pair {
            if obs.dim() != d {
                return Err(CoreError::DimensionMismatch {
                    expected: d,
                    found: obs.dim(),
                });
            }
            let overshoot = obs
                .eigenvalues()
                .iter()
                .fold(0.0f64, |m, &v| m.max(v.abs()));
            if overshoot > 1.0 + tol::EQUALITY_ABS {
                return Err(CoreError::InvalidArgument(format!(
                    "observable spectrum reaches {overshoot}, outside [-1, 1]"
                )));
            }
        }
    }
    Ok(d)
}

/// The operator sum_t c_t (A_1^(t_1) x ... x A_N^(t_N)).
pub fn bell_operator(
    functional: &BellFunctional,
    settings: &[[Observable; 2]],
) -> Result<HermitianOperator> {
    validate_settings(functional, settings)?;
    let mut total: Option<ComplexMatrix> = None;
    for (tuple, &c) in &functional.coefficients {
        let mut term: Option<ComplexMatrix> = None;
        for (site, &t) in tuple.iter().enumerate() {
            let m = settings[site][t as usize].matrix();
            term = Some(match term {
                None => m.clone(),
                Some(acc) => kron(&acc, m),
            });
        }
        let term = term.unwrap().scale(c);
        total = Some(match total {
            None => term,
            Some(acc) => acc + term,
        });
    }
    Ok(HermitianOperator::wrap(total.unwrap()))
}

/// A quantum evaluation of a functional against its classical and
/// dimensional bounds.
#[derive(Clone, Debug)]
pub struct ViolationReport {
    pub quantum_value: f64,
    pub classical_bound: f64,
    /// |quantum value| / classical bound.
    pub ratio: f64,
    /// min(d^((N-1)/2), 3^(N-1)) for the evaluated dimensions.
    pub upper_bound: f64,
    pub checks: Vec<Check>,
}

impl ViolationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Evaluates tr[rho B] for the functional's Bell operator at the given
/// settings. The ratio bound is a theorem for spectra in [-1, 1], so
/// exceeding it fails the report rather than erroring.
pub fn evaluate(
    functional: &BellFunctional,
    state: &DensityMatrix,
    settings: &[[Observable; 2]],
) -> Result<ViolationReport> {
    let d = validate_settings(functional, settings)?;
    let operator = bell_operator(functional, settings)?;
    if operator.dim() != state.dim() {
        return Err(CoreError::DimensionMismatch {
            expected: operator.dim(),
            found: state.dim(),
        });
    }
    let quantum_value = crate::operator::trace_pairing(state, &operator)?;
    let ratio = quantum_value.abs() / functional.classical_bound;
    let bound = upper_bound(d, functional.n_sites)?;
    let checks = vec![Check::upper(
        "violation-ratio-within-dimensional-bound",
        ratio,
        bound,
        tol::OPT_SLACK_ABS,
    )];
    Ok(ViolationReport {
        quantum_value,
        classical_bound: functional.classical_bound,
        ratio,
        upper_bound: bound,
        checks,
    })
}

/// Alternating maximization options. Deterministic for a fixed seed.
#[derive(Clone, Copy, Debug)]
pub struct SeesawOptions {
    pub seed: u64,
    pub restarts: usize,
    pub max_sweeps: usize,
    pub rel_tol: f64,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        Self {
            seed: 7,
            restarts: 20,
            max_sweeps: 500,
            rel_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SeesawResult {
    pub best_value: f64,
    pub best_settings: Vec<[Observable; 2]>,
    /// Objective after each sweep of the best restart; nondecreasing.
    pub history: Vec<f64>,
    pub restarts_run: usize,
}

/// Maximizes tr[rho B] over one dichotomic observable per site and setting
/// by alternating exact single operator updates. The objective is linear in
/// each observable, so the maximizer for a fixed rest is the sign operator
/// of the effective matrix G = Tr_rest[rho (X x I_site)]; each update is a
/// true maximum, making every sweep monotone. Multiple seeded restarts
/// guard against poor stationary points.
pub fn seesaw_optimize(
    functional: &BellFunctional,
    state: &DensityMatrix,
    local_dim: usize,
    options: SeesawOptions,
) -> Result<SeesawResult> {
    let n = functional.n_sites;
    if n < 2 {
        return Err(CoreError::InvalidArgument(
            "optimization needs at least 2 sites".into(),
        ));
    }
    let d = local_dim;
    let total = d
        .checked_pow(n as u32)
        .ok_or_else(|| CoreError::InvalidArgument("d^N overflows".into()))?;
    if state.dim() != total {
        return Err(CoreError::DimensionMismatch {
            expected: total,
            found: state.dim(),
        });
    }
    if options.restarts == 0 || options.max_sweeps == 0 {
        return Err(CoreError::InvalidArgument(
            "restarts and sweep budget must be positive".into(),
        ));
    }

    let rho = state.matrix();
    let site_tables = index_tables(d, n, total);
    let mut rng = presets::seeded_rng(options.seed);

    let mut best_value = f64::NEG_INFINITY;
    let mut best_ops: Vec<[ComplexMatrix; 2]> = Vec::new();
    let mut best_history: Vec<f64> = Vec::new();

    for _ in 0..options.restarts {
        let mut ops: Vec<[ComplexMatrix; 2]> = (0..n)
            .map(|_| [random_sign_operator(d, &mut rng), random_sign_operator(d, &mut rng)])
            .collect();
        let mut history = Vec::new();
        let mut prev = objective(functional, rho, &ops);
        for _ in 0..options.max_sweeps {
            for site in 0..n {
                for setting in 0..2 {
                    let g = effective_operator(
                        functional,
                        rho,
                        &ops,
                        site,
                        setting as u8,
                        d,
                        &site_tables[site],
                    )?;
                    ops[site][setting] = sign_operator(&g)?;
                }
            }
            let value = objective(functional, rho, &ops);
            history.push(value);
            if value - prev <= options.rel_tol * value.abs().max(1.0) {
                break;
            }
            prev = value;
        }
        let value = *history.last().expect("at least one sweep");
        if value > best_value {
            best_value = value;
            best_ops = ops;
            best_history = history;
        }
    }

    let best_settings = best_ops
        .into_iter()
        .map(|[a, b]| Ok([Observable::new(a)?, Observable::new(b)?]))
        .collect::<Result<Vec<_>>>()?;
    Ok(SeesawResult {
        best_value,
        best_settings,
        history: best_history,
        restarts_run: options.restarts,
    })
}

/// For each full index, its digit at `site` and its index with that digit
/// removed, so that G contractions run directly over the state matrix.
fn index_tables(d: usize, n: usize, total: usize) -> Vec<Vec<(usize, usize)>> {
    (0..n)
        .map(|site| {
            (0..total)
                .map(|full| {
                    let place = d.pow((n - 1 - site) as u32);
                    let digit = full / place % d;
                    let rest = full / (place * d) * place + full % place;
                    (digit, rest)
                })
                .collect()
        })
        .collect()
}

fn random_sign_operator(d: usize, rng: &mut rand_chacha::ChaCha8Rng) -> ComplexMatrix {
    let v = presets::random_unitary(d, rng);
    let mut diag = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        diag[(i, i)] = Complex64::new(s, 0.0);
    }
    &v * diag * v.adjoint()
}

fn objective(functional: &BellFunctional, rho: &ComplexMatrix, ops: &[[ComplexMatrix; 2]]) -> f64 {
    let mut value = 0.0;
    for (tuple, &c) in &functional.coefficients {
        let mut term: Option<ComplexMatrix> = None;
        for (site, &t) in tuple.iter().enumerate() {
            let m = &ops[site][t as usize];
            term = Some(match term {
                None => m.clone(),
                Some(acc) => kron(&acc, m),
            });
        }
        value += c * trace_product(rho, &term.unwrap()).re;
    }
    value
}

/// G with tr[A G] = sum over terms containing (site, setting) of
/// c_t tr[rho (... x A x ...)], i.e. the gradient of the objective in the
/// chosen observable slot.
fn effective_operator(
    functional: &BellFunctional,
    rho: &ComplexMatrix,
    ops: &[[ComplexMatrix; 2]],
    site: usize,
    setting: u8,
    d: usize,
    table: &[(usize, usize)],
) -> Result<ComplexMatrix> {
    let n = ops.len();
    let rest_dim = rho.nrows() / d;
    // X = sum over matching terms of c_t (other sites' operators)
    let mut x = ComplexMatrix::zeros(rest_dim, rest_dim);
    for (tuple, &c) in &functional.coefficients {
        if tuple[site] != setting {
            continue;
        }
        let mut term: Option<ComplexMatrix> = None;
        for other in 0..n {
            if other == site {
                continue;
            }
            let m = &ops[other][tuple[other] as usize];
            term = Some(match term {
                None => m.clone(),
                Some(acc) => kron(&acc, m),
            });
        }
        x += term.unwrap().scale(c);
    }
    // index full space by (rest index, local digit) through the site table
    let mut by_rest = vec![vec![0usize; d]; rest_dim];
    for (full, &(digit, rest)) in table.iter().enumerate() {
        by_rest[rest][digit] = full;
    }
    let mut g = ComplexMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..rest_dim {
                for s in 0..rest_dim {
                    acc += rho[(by_rest[r][a], by_rest[s][b])] * x[(s, r)];
                }
            }
            g[(a, b)] = acc;
        }
    }
    Ok(g)
}

/// The +-1 spectrum operator maximizing tr[A G]: signs of G's eigenvalues on
/// their eigenspaces, with the zero eigenspace sent to +1.
fn sign_operator(g: &ComplexMatrix) -> Result<ComplexMatrix> {
    let h = HermitianOperator::wrap(g.clone());
    let dec = spectral_decompose(&h, tol::GROUPING_REL)?;
    let d = h.dim();
    let mut out = ComplexMatrix::zeros(d, d);
    for (value, projector) in dec.eigenvalues.iter().zip(&dec.projectors) {
        let s = if *value >= 0.0 { 1.0 } else { -1.0 };
        out += projector.matrix().scale(s);
    }
    Ok(out)
}

/// The full bound chain for one scenario and functional: violation ratio,
/// the total variation of the constructed local model at the same settings,
/// and the dimensional bound, each dominating the previous.
#[derive(Clone, Debug)]
pub struct SandwichReport {
    pub violation: ViolationReport,
    pub total_variation: f64,
    pub dimensional_bound: f64,
    pub checks: Vec<Check>,
}

impl SandwichReport {
    pub fn passed(&self) -> bool {
        self.violation.passed() && self.checks.iter().all(|c| c.passed)
    }
}

pub fn sandwich_report(
    spec: &ScenarioSpec,
    functional: &BellFunctional,
) -> Result<(SandwichReport, ScenarioDistribution)> {
    if functional.n_sites != spec.n_sites() {
        return Err(CoreError::DimensionMismatch {
            expected: spec.n_sites(),
            found: functional.n_sites,
        });
    }
    let violation = evaluate(functional, spec.state(), spec.settings())?;
    let dist = build_nu_npartite(spec)?;
    let tv = dist.total_variation();
    let dimensional = spec.dimensional_bound();
    let checks = vec![
        Check::upper(
            "violation-ratio-within-total-variation",
            violation.ratio,
            tv,
            tol::OPT_SLACK_ABS,
        ),
        Check::upper(
            "total-variation-within-dimensional-bound",
            tv,
            dimensional,
            tol::BOUND_SLACK_ABS,
        ),
    ];
    let report = SandwichReport {
        violation,
        total_variation: tv,
        dimensional_bound: dimensional,
        checks,
    };
    Ok((report, dist))
}

/// Optimizes the settings for the given state first, then reports the chain
/// at the optimized settings.
pub fn sandwich_report_optimized(
    spec: &ScenarioSpec,
    functional: &BellFunctional,
    options: SeesawOptions,
) -> Result<(SandwichReport, ScenarioDistribution, SeesawResult)> {
    let seesaw = seesaw_optimize(functional, spec.state(), spec.local_dim(), options)?;
    let optimized = ScenarioSpec::new(
        spec.n_sites(),
        spec.local_dim(),
        seesaw.best_settings.clone(),
        spec.state().clone(),
    )?;
    let (report, dist) = sandwich_report(&optimized, functional)?;
    Ok((report, dist, seesaw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::operator_norm;
    use approx::assert_abs_diff_eq;

    #[test]
    fn upper_bound_closed_forms() {
        assert_abs_diff_eq!(upper_bound(2, 2).unwrap(), 2.0_f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(upper_bound(2, 3).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(upper_bound(16, 3).unwrap(), 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            upper_bound(2, 4).unwrap(),
            2.0 * 2.0_f64.sqrt(),
            epsilon = 1e-12
        );
        assert!(upper_bound(1, 2).is_err());
        assert!(upper_bound(2, 1).is_err());
    }

    #[test]
    fn recursion_at_two_sites_is_chsh() {
        let mk = mermin_klyshko(2).unwrap();
        let reference = chsh();
        assert_eq!(mk, reference);
    }

    #[test]
    fn three_site_recursion_coefficients() {
        let mk = mermin_klyshko(3).unwrap();
        let expected: BTreeMap<Vec<u8>, f64> = [
            (vec![0, 0, 1], 1.0),
            (vec![0, 1, 0], 1.0),
            (vec![1, 0, 0], 1.0),
            (vec![1, 1, 1], -1.0),
        ]
        .into_iter()
        .collect();
        assert_eq!(mk.coefficients(), &expected);
    }

    #[test]
    fn stated_classical_bounds_match_brute_force() {
        assert_abs_diff_eq!(chsh().classical_bound_brute_force(), 2.0, epsilon = 1e-12);
        for n in 2..=5 {
            let mk = mermin_klyshko(n).unwrap();
            assert_abs_diff_eq!(mk.classical_bound_brute_force(), 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn chsh_operator_norm_is_tsirelson() {
        let op = bell_operator(&chsh(), &presets::chsh_optimal_settings()).unwrap();
        assert_abs_diff_eq!(operator_norm(&op), 2.0 * 2.0_f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn singlet_reaches_the_two_qubit_bound() {
        let report = evaluate(
            &chsh(),
            &presets::singlet(),
            &presets::chsh_optimal_settings(),
        )
        .unwrap();
        assert_abs_diff_eq!(report.quantum_value, 2.0 * 2.0_f64.sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(report.ratio, report.upper_bound, epsilon = 1e-9);
        assert!(report.passed());
    }

    #[test]
    fn ghz_saturates_the_recursion_bound() {
        for n in [3usize, 4] {
            let report = evaluate(
                &mermin_klyshko(n).unwrap(),
                &presets::ghz(n).unwrap(),
                &presets::mk_optimal_settings(n).unwrap(),
            )
            .unwrap();
            let expected = 2.0 * 2.0_f64.powf((n as f64 - 1.0) / 2.0);
            assert_abs_diff_eq!(report.quantum_value.abs(), expected, epsilon = 1e-9);
            assert_abs_diff_eq!(report.ratio, report.upper_bound, epsilon = 1e-9);
            assert!(report.passed());
        }
    }

    #[test]
    fn evaluate_rejects_oversized_spectra() {
        let mut settings = presets::chsh_optimal_settings();
        settings[0][0] = Observable::new(presets::pauli_z().scale(1.5)).unwrap();
        let err = evaluate(&chsh(), &presets::singlet(), &settings);
        assert!(err.is_err());
    }

    #[test]
    fn product_states_never_violate() {
        let mut rng = presets::seeded_rng(131);
        for _ in 0..10 {
            let state = presets::product_density(&[
                presets::random_density(2, &mut rng),
                presets::random_density(2, &mut rng),
            ])
            .unwrap();
            let settings = vec![
                [
                    presets::random_nondegenerate_observable(2, &mut rng),
                    presets::random_nondegenerate_observable(2, &mut rng),
                ],
                [
                    presets::random_nondegenerate_observable(2, &mut rng),
                    presets::random_nondegenerate_observable(2, &mut rng),
                ],
            ];
            let report = evaluate(&chsh(), &state, &settings).unwrap();
            assert!(
                report.quantum_value.abs() <= 2.0 + 1e-9,
                "separable state violated: {}",
                report.quantum_value
            );
        }
    }

    #[test]
    fn seesaw_finds_the_singlet_optimum() {
        let options = SeesawOptions {
            restarts: 5,
            max_sweeps: 200,
            ..Default::default()
        };
        let result = seesaw_optimize(&chsh(), &presets::singlet(), 2, options).unwrap();
        assert_abs_diff_eq!(result.best_value, 2.0 * 2.0_f64.sqrt(), epsilon = 1e-6);
        for pair in result.history.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-12, "objective decreased: {pair:?}");
        }
        // determinism for a fixed seed
        let again = seesaw_optimize(&chsh(), &presets::singlet(), 2, options).unwrap();
        assert_eq!(result.best_value.to_bits(), again.best_value.to_bits());
    }

    #[test]
    fn seesaw_on_noise_stops_at_the_classical_bound() {
        let options = SeesawOptions {
            restarts: 4,
            max_sweeps: 100,
            ..Default::default()
        };
        let result =
            seesaw_optimize(&chsh(), &DensityMatrix::maximally_mixed(4), 2, options).unwrap();
        assert!(result.best_value <= 2.0 + 1e-6, "{}", result.best_value);
        assert!(result.best_value >= 2.0 - 1e-6, "{}", result.best_value);
    }

    #[test]
    fn seesaw_matches_ghz_optimum() {
        let options = SeesawOptions {
            restarts: 6,
            max_sweeps: 200,
            ..Default::default()
        };
        let result = seesaw_optimize(
            &mermin_klyshko(3).unwrap(),
            &presets::ghz(3).unwrap(),
            2,
            options,
        )
        .unwrap();
        assert_abs_diff_eq!(result.best_value, 4.0, epsilon = 1e-6);
    }

    #[test]
    fn sandwich_chain_on_the_singlet() {
        let spec = ScenarioSpec::new(
            2,
            2,
            presets::chsh_optimal_settings(),
            presets::singlet(),
        )
        .unwrap();
        let (report, dist) = sandwich_report(&spec, &chsh()).unwrap();
        assert!(report.passed());
        let sqrt2 = 2.0_f64.sqrt();
        assert_abs_diff_eq!(report.violation.ratio, sqrt2, epsilon = 1e-9);
        assert_abs_diff_eq!(report.total_variation, sqrt2, epsilon = 1e-9);
        assert_abs_diff_eq!(report.dimensional_bound, sqrt2, epsilon = 1e-12);
        assert_eq!(dist.table().n_cells(), 16);
    }

    #[test]
    fn sandwich_chain_with_commuting_settings() {
        let z = Observable::new(presets::pauli_z()).unwrap();
        let spec = ScenarioSpec::new(
            2,
            2,
            vec![[z.clone(), z.clone()], [z.clone(), z.clone()]],
            presets::singlet(),
        )
        .unwrap();
        let (report, _) = sandwich_report(&spec, &chsh()).unwrap();
        assert!(report.passed());
        assert_abs_diff_eq!(report.violation.quantum_value, -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.violation.ratio, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.total_variation, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn optimized_sandwich_respects_the_chain() {
        let mut rng = presets::seeded_rng(139);
        let spec = ScenarioSpec::new(
            2,
            2,
            presets::chsh_optimal_settings(),
            presets::random_density(4, &mut rng),
        )
        .unwrap();
        let options = SeesawOptions {
            restarts: 4,
            max_sweeps: 100,
            ..Default::default()
        };
        let (report, _, seesaw) = sandwich_report_optimized(&spec, &chsh(), options).unwrap();
        assert!(report.passed(), "checks: {:?}", report.checks);
        assert_abs_diff_eq!(
            report.violation.quantum_value,
            seesaw.best_value,
            epsilon = 1e-9
        );
    }

    #[test]
    fn functional_validation() {
        assert!(BellFunctional::new(2, BTreeMap::new(), 2.0).is_err());
        let mut bad_len = BTreeMap::new();
        bad_len.insert(vec![0], 1.0);
        assert!(BellFunctional::new(2, bad_len, 2.0).is_err());
        let mut bad_setting = BTreeMap::new();
        bad_setting.insert(vec![0, 2], 1.0);
        assert!(BellFunctional::new(2, bad_setting, 2.0).is_err());
        let mut fine = BTreeMap::new();
        fine.insert(vec![0, 1], 1.0);
        assert!(BellFunctional::new(2, fine.clone(), 0.0).is_err());
        assert!(BellFunctional::new(2, fine, 1.0).is_ok());
    }
}
