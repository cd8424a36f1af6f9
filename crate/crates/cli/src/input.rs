//! Structured input parsing. Every value accepts a named factory string,
//! inline JSON, or `@FILE` holding JSON; matrix entries are plain numbers,
//! `[re, im]` pairs, or `{"re": .., "im": ..}` objects.

use std::collections::BTreeMap;
use std::fs;

use serde::Deserialize;

use qhv_core::bell::BellFunctional;
use qhv_core::operator::{identity, max_abs};
use qhv_core::{presets, tensor_embed, tol};
use qhv_core::{Complex64, ComplexMatrix, ComplexVector, DensityMatrix, Observable};

use crate::CliError;

type Parsed<T> = Result<T, CliError>;

fn input_err(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

/// Core construction failures at parse time are the user's input, not a
/// numerical breakdown.
fn core_input(context: &str, e: qhv_core::CoreError) -> CliError {
    input_err(format!("{context}: {e}"))
}

/// Inline JSON or @FILE content; None when the argument should be treated as
/// a factory name.
fn json_text(spec: &str) -> Parsed<Option<String>> {
    if let Some(path) = spec.strip_prefix('@') {
        let text = fs::read_to_string(path)
            .map_err(|e| input_err(format!("cannot read {path}: {e}")))?;
        return Ok(Some(text));
    }
    if spec.trim_start().starts_with(['{', '[']) {
        return Ok(Some(spec.to_string()));
    }
    Ok(None)
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Parsed<T> {
    serde_json::from_str(text).map_err(|e| {
        input_err(format!(
            "{what}: invalid JSON at line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })
}

fn parse_num<T: std::str::FromStr>(field: &str, text: &str) -> Parsed<T> {
    text.parse()
        .map_err(|_| input_err(format!("cannot parse {field} from {text:?}")))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ComplexEntry {
    Real(f64),
    Pair([f64; 2]),
    Parts {
        re: f64,
        #[serde(default)]
        im: f64,
    },
}

impl ComplexEntry {
    fn value(&self) -> Complex64 {
        match *self {
            ComplexEntry::Real(re) => Complex64::new(re, 0.0),
            ComplexEntry::Pair([re, im]) => Complex64::new(re, im),
            ComplexEntry::Parts { re, im } => Complex64::new(re, im),
        }
    }
}

fn matrix_from_entries(rows: &[Vec<ComplexEntry>], what: &str) -> Parsed<ComplexMatrix> {
    let n = rows.len();
    if n == 0 {
        return Err(input_err(format!("{what}: empty matrix")));
    }
    if rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(input_err(format!("{what}: ragged matrix rows")));
    }
    Ok(ComplexMatrix::from_fn(n, rows[0].len(), |i, j| {
        rows[i][j].value()
    }))
}

#[derive(Deserialize)]
struct StateJson {
    #[serde(default)]
    matrix: Option<Vec<Vec<ComplexEntry>>>,
    #[serde(default)]
    vector: Option<Vec<ComplexEntry>>,
}

pub fn parse_state(spec: &str) -> Parsed<DensityMatrix> {
    if let Some(text) = json_text(spec)? {
        let doc: StateJson = parse_json(&text, "state")?;
        return match (doc.matrix, doc.vector) {
            (Some(rows), None) => DensityMatrix::new(matrix_from_entries(&rows, "state")?)
                .map_err(|e| core_input("state", e)),
            (None, Some(amps)) => {
                let v = ComplexVector::from_iterator(amps.len(), amps.iter().map(|a| a.value()));
                DensityMatrix::pure(&v).map_err(|e| core_input("state", e))
            }
            _ => Err(input_err("state: provide exactly one of matrix, vector")),
        };
    }
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["singlet"] => Ok(presets::singlet()),
        ["phi_plus"] => Ok(presets::bell_phi_plus()),
        ["ghz", n] => presets::ghz(parse_num("site count", n)?)
            .map_err(|e| core_input("state", e)),
        ["maximally_mixed", d] => Ok(DensityMatrix::maximally_mixed(parse_num(
            "dimension", d,
        )?)),
        ["random_density", d, seed] => {
            let mut rng = presets::seeded_rng(parse_num("seed", seed)?);
            Ok(presets::random_density(parse_num("dimension", d)?, &mut rng))
        }
        ["random_pure", d, seed] => {
            let mut rng = presets::seeded_rng(parse_num("seed", seed)?);
            Ok(presets::random_pure_state(
                parse_num("dimension", d)?,
                &mut rng,
            ))
        }
        _ => Err(input_err(format!(
            "unknown state {spec:?}; expected singlet, phi_plus, ghz:N, maximally_mixed:D, \
             random_density:D:SEED, random_pure:D:SEED, inline JSON, or @FILE"
        ))),
    }
}

#[derive(Deserialize)]
struct MatrixJson {
    matrix: Vec<Vec<ComplexEntry>>,
}

pub fn parse_observable(spec: &str) -> Parsed<Observable> {
    if let Some(text) = json_text(spec)? {
        let doc: MatrixJson = parse_json(&text, "observable")?;
        return Observable::new(matrix_from_entries(&doc.matrix, "observable")?)
            .map_err(|e| core_input("observable", e));
    }
    if let Some(rest) = spec.strip_prefix("embed:") {
        let mut it = rest.splitn(3, ':');
        let (site, n_sites, inner) = (
            it.next().unwrap_or_default(),
            it.next().unwrap_or_default(),
            it.next().unwrap_or_default(),
        );
        if inner.is_empty() {
            return Err(input_err("embed needs embed:SITE:NSITES:INNER"));
        }
        return tensor_embed(
            &parse_observable(inner)?,
            parse_num("site", site)?,
            parse_num("site count", n_sites)?,
        )
        .map_err(|e| core_input("observable", e));
    }
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["pauli", axis] if axis.len() == 1 => {
            presets::pauli(axis.chars().next().unwrap()).map_err(|e| core_input("observable", e))
        }
        ["bloch", coords] => {
            let v: Vec<f64> = coords
                .split(',')
                .map(|c| parse_num("bloch coordinate", c.trim()))
                .collect::<Parsed<_>>()?;
            let a: [f64; 3] = v
                .try_into()
                .map_err(|_| input_err("bloch needs exactly three coordinates"))?;
            presets::bloch_observable(a).map_err(|e| core_input("observable", e))
        }
        ["angle", phi] => Ok(presets::angle_observable(parse_num("angle", phi)?)),
        ["identity", d] => Observable::new(identity(parse_num("dimension", d)?))
            .map_err(|e| core_input("observable", e)),
        ["random", d, seed] => {
            let mut rng = presets::seeded_rng(parse_num("seed", seed)?);
            Ok(presets::random_nondegenerate_observable(
                parse_num("dimension", d)?,
                &mut rng,
            ))
        }
        _ => Err(input_err(format!(
            "unknown observable {spec:?}; expected pauli:x|y|z, bloch:AX,AY,AZ, angle:PHI, \
             identity:D, random:D:SEED, embed:SITE:NSITES:INNER, inline JSON, or @FILE"
        ))),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ObservableNode {
    Name(String),
    Matrix(MatrixJson),
}

impl ObservableNode {
    fn build(&self) -> Parsed<Observable> {
        match self {
            ObservableNode::Name(name) => parse_observable(name),
            ObservableNode::Matrix(doc) => {
                Observable::new(matrix_from_entries(&doc.matrix, "observable")?)
                    .map_err(|e| core_input("observable", e))
            }
        }
    }
}

pub fn parse_settings(spec: &str) -> Parsed<Vec<[Observable; 2]>> {
    if let Some(text) = json_text(spec)? {
        let doc: Vec<[ObservableNode; 2]> = parse_json(&text, "settings")?;
        return doc
            .iter()
            .map(|[a, b]| Ok([a.build()?, b.build()?]))
            .collect();
    }
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["chsh_optimal"] => Ok(presets::chsh_optimal_settings()),
        ["mk_optimal", n] => presets::mk_optimal_settings(parse_num("site count", n)?)
            .map_err(|e| core_input("settings", e)),
        _ => Err(input_err(format!(
            "unknown settings {spec:?}; expected chsh_optimal, mk_optimal:N, inline JSON \
             (array of per site observable pairs), or @FILE"
        ))),
    }
}

#[derive(Deserialize)]
struct TermJson {
    settings: Vec<u8>,
    coefficient: f64,
}

#[derive(Deserialize)]
struct FunctionalJson {
    n_sites: usize,
    classical_bound: f64,
    terms: Vec<TermJson>,
}

pub fn parse_functional(spec: &str) -> Parsed<BellFunctional> {
    if let Some(text) = json_text(spec)? {
        let doc: FunctionalJson = parse_json(&text, "functional")?;
        let mut coefficients: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
        for term in doc.terms {
            *coefficients.entry(term.settings).or_insert(0.0) += term.coefficient;
        }
        return BellFunctional::new(doc.n_sites, coefficients, doc.classical_bound)
            .map_err(|e| core_input("functional", e));
    }
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["chsh"] => Ok(qhv_core::bell::chsh()),
        ["mk", n] => qhv_core::bell::mermin_klyshko(parse_num("site count", n)?)
            .map_err(|e| core_input("functional", e)),
        _ => Err(input_err(format!(
            "unknown functional {spec:?}; expected chsh, mk:N, inline JSON, or @FILE"
        ))),
    }
}

pub fn parse_unitary(spec: &str) -> Parsed<ComplexMatrix> {
    let matrix = if let Some(text) = json_text(spec)? {
        let doc: MatrixJson = parse_json(&text, "unitary")?;
        matrix_from_entries(&doc.matrix, "unitary")?
    } else {
        let parts: Vec<&str> = spec.split(':').collect();
        match parts.as_slice() {
            ["identity", d] => identity(parse_num("dimension", d)?),
            ["random", d, seed] => {
                let mut rng = presets::seeded_rng(parse_num("seed", seed)?);
                presets::random_unitary(parse_num("dimension", d)?, &mut rng)
            }
            _ => {
                return Err(input_err(format!(
                    "unknown unitary {spec:?}; expected identity:D, random:D:SEED, inline \
                     JSON, or @FILE"
                )))
            }
        }
    };
    if matrix.nrows() != matrix.ncols() {
        return Err(input_err("unitary: matrix must be square"));
    }
    let dev = max_abs(&(matrix.adjoint() * &matrix - identity(matrix.nrows())));
    if dev > tol::UNITARITY_ABS {
        return Err(input_err(format!(
            "unitary: U^H U deviates from the identity by {dev:.3e}"
        )));
    }
    Ok(matrix)
}

pub fn parse_event_tuples(spec: &str) -> Parsed<Vec<Vec<f64>>> {
    let text = json_text(spec)?
        .ok_or_else(|| input_err("event: expected inline JSON or @FILE"))?;
    parse_json(&text, "event")
}

/// Grid cap precedence: explicit flag, then QHV_MAX_CELLS, then the default.
pub fn grid_cap(flag: Option<usize>) -> Parsed<usize> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match std::env::var("QHV_MAX_CELLS") {
        Ok(text) => text
            .parse()
            .map_err(|_| input_err(format!("QHV_MAX_CELLS: cannot parse {text:?}"))),
        Err(_) => Ok(tol::MAX_GRID_CELLS),
    }
}
