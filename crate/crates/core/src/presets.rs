//! Canonical states, observables and measurement settings, plus seeded
//! random generators used by tests, the CLI factories and the optimizer.
//!
//! All randomness flows through `seeded_rng`, so identical seeds reproduce
//! identical instances bit for bit.

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::CoreError;
use crate::operator::{
    identity, kron, Complex64, ComplexMatrix, DensityMatrix, HermitianOperator, Observable,
};
use crate::Result;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn standard_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Complex Ginibre matrix with i.i.d. standard normal entries.
pub fn random_ginibre(dim: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, dim, |_, _| standard_complex(rng))
}

/// GUE style Hermitian matrix (G + G*)/2.
pub fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> HermitianOperator {
    let g = random_ginibre(dim, rng);
    HermitianOperator::wrap(g)
}

/// Haar distributed unitary via the QR decomposition of a Ginibre matrix,
/// with the R diagonal phases absorbed into Q.
pub fn random_unitary(dim: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let qr = random_ginibre(dim, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn random_state_vector(dim: usize, rng: &mut ChaCha8Rng) -> DVector<Complex64> {
    let v = DVector::from_fn(dim, |_, _| standard_complex(rng));
    let norm = v.norm();
    v.unscale(norm)
}

pub fn random_pure_state(dim: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    DensityMatrix::pure(&random_state_vector(dim, rng)).expect("normalized vector")
}

/// Full rank random density matrix G G* / tr(G G*).
pub fn random_density(dim: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let g = random_ginibre(dim, rng);
    let gg = &g * g.adjoint();
    let trace = gg.trace().re;
    DensityMatrix::new(gg.unscale(trace)).expect("Wishart matrix is a state")
}

/// Random observable with a simple spectrum: Haar eigenbasis and eigenvalues
/// drawn uniformly from (-1, 1), resampled until every spectral gap exceeds
/// 1e-2 so grouping can never merge them.
pub fn random_nondegenerate_observable(dim: usize, rng: &mut ChaCha8Rng) -> Observable {
    let u = random_unitary(dim, rng);
    let eigenvalues = loop {
        let mut vals: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if vals.windows(2).all(|w| w[1] - w[0] >= 1e-2) {
            break vals;
        }
    };
    let diag = ComplexMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            Complex64::new(eigenvalues[i], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let m = &u * diag * u.adjoint();
    Observable::new(m).expect("constructed spectrum is simple")
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ],
    )
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, 0.0),
        ],
    )
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(-1.0, 0.0),
        ],
    )
}

pub fn pauli(axis: char) -> Result<Observable> {
    let m = match axis {
        'x' => pauli_x(),
        'y' => pauli_y(),
        'z' => pauli_z(),
        other => {
            return Err(CoreError::InvalidArgument(format!(
                "unknown Pauli axis '{other}'"
            )))
        }
    };
    Observable::new(m)
}

/// Spin observable a . sigma for a Bloch vector a, which must be unit length
/// within 1e-6. The vector is renormalized exactly before use.
pub fn bloch_observable(a: [f64; 3]) -> Result<Observable> {
    let norm = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(CoreError::InvalidArgument(format!(
            "Bloch vector has length {norm}, expected 1"
        )));
    }
    let (ax, ay, az) = (a[0] / norm, a[1] / norm, a[2] / norm);
    let m = pauli_x().scale(ax) + pauli_y().scale(ay) + pauli_z().scale(az);
    Observable::new(m)
}

/// cos(phi) sigma_x + sin(phi) sigma_y, the equatorial spin observable.
pub fn angle_observable(phi: f64) -> Observable {
    bloch_observable([phi.cos(), phi.sin(), 0.0]).expect("unit vector")
}

/// Two qubit singlet (|01> - |10>)/sqrt(2).
pub fn singlet() -> DensityMatrix {
    let s = 1.0 / 2.0_f64.sqrt();
    let v = DVector::from_vec(vec![
        Complex64::new(0.0, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(-s, 0.0),
        Complex64::new(0.0, 0.0),
    ]);
    DensityMatrix::pure(&v).expect("unit vector")
}

/// N qubit GHZ state (|0...0> + |1...1>)/sqrt(2).
pub fn ghz(n_sites: usize) -> Result<DensityMatrix> {
    if n_sites < 2 {
        return Err(CoreError::InvalidArgument(
            "GHZ state needs at least 2 sites".into(),
        ));
    }
    let dim = 1usize << n_sites;
    let s = 1.0 / 2.0_f64.sqrt();
    let mut v = DVector::from_element(dim, Complex64::new(0.0, 0.0));
    v[0] = Complex64::new(s, 0.0);
    v[dim - 1] = Complex64::new(s, 0.0);
    DensityMatrix::pure(&v)
}

/// Bell diagonal two qubit state, used as a mixing test bed.
pub fn bell_phi_plus() -> DensityMatrix {
    let s = 1.0 / 2.0_f64.sqrt();
    let v = DVector::from_vec(vec![
        Complex64::new(s, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(s, 0.0),
    ]);
    DensityMatrix::pure(&v).expect("unit vector")
}

/// Settings reaching the Tsirelson value +2 sqrt(2) of the standard CHSH
/// functional on the singlet: site 0 measures sigma_z and sigma_x, site 1
/// measures -(sigma_z + sigma_x)/sqrt(2) and (sigma_x - sigma_z)/sqrt(2).
pub fn chsh_optimal_settings() -> Vec<[Observable; 2]> {
    let s = 1.0 / 2.0_f64.sqrt();
    vec![
        [
            bloch_observable([0.0, 0.0, 1.0]).unwrap(),
            bloch_observable([1.0, 0.0, 0.0]).unwrap(),
        ],
        [
            bloch_observable([-s, 0.0, -s]).unwrap(),
            bloch_observable([s, 0.0, -s]).unwrap(),
        ],
    ]
}

/// Equatorial settings reaching the maximal Mermin-Klyshko value
/// 2 * 2^((N-1)/2) on the N qubit GHZ state: every site measures the pair
/// (X, Y) rotated by a common phase, with a compensating rotation at site 0.
pub fn mk_optimal_settings(n_sites: usize) -> Result<Vec<[Observable; 2]>> {
    if n_sites < 2 {
        return Err(CoreError::InvalidArgument(
            "Mermin-Klyshko settings need at least 2 sites".into(),
        ));
    }
    let phi0 = -(n_sites as f64 - 1.0) * std::f64::consts::FRAC_PI_4;
    let mut settings = vec![[
        angle_observable(phi0),
        angle_observable(phi0 + std::f64::consts::FRAC_PI_2),
    ]];
    for _ in 1..n_sites {
        settings.push([
            angle_observable(0.0),
            angle_observable(std::f64::consts::FRAC_PI_2),
        ]);
    }
    Ok(settings)
}

/// A state, observable pair and outcome tuple on which the joint measurement
/// measure is strictly negative, so no ordinary probability model can
/// reproduce it: state (I - sigma_y)/2, observables sigma_x and
/// (-sigma_x + sigma_y)/sqrt(2), outcomes (+1, +1). The value is
/// (1 - sqrt(2))/4.
pub fn negativity_witness() -> (DensityMatrix, Vec<Observable>, Vec<f64>) {
    let rho = DensityMatrix::new((identity(2) - pauli_y()).unscale(2.0)).expect("Bloch ball state");
    let s = 1.0 / 2.0_f64.sqrt();
    let obs = vec![
        bloch_observable([1.0, 0.0, 0.0]).unwrap(),
        bloch_observable([-s, s, 0.0]).unwrap(),
    ];
    (rho, obs, vec![1.0, 1.0])
}

/// Embeds single site settings into the product space, a convenience for
/// building product states.
pub fn product_density(locals: &[DensityMatrix]) -> Result<DensityMatrix> {
    if locals.is_empty() {
        return Err(CoreError::InvalidArgument("empty product".into()));
    }
    let mut m = locals[0].matrix().clone();
    for s in &locals[1..] {
        m = kron(&m, s.matrix());
    }
    DensityMatrix::new(m)
}
