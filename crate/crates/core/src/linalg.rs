//! Small dense complex kernels on top of `nalgebra`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMatrix = DMatrix<Complex64>;

/// Haar-distributed `n × n` unitary.
///
/// QR of a complex Ginibre matrix with the phases of `R`'s diagonal moved into
/// `Q`, so that `R` has a positive real diagonal.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let z = CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    });
    let qr = z.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Max entrywise deviation of `M·M*` and `M*·M` from the identity.
pub fn unitarity_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let id = CMatrix::identity(n, n);
    let a = (m * m.adjoint() - &id).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let b = (m.adjoint() * m - &id).iter().map(|z| z.norm()).fold(0.0, f64::max);
    a.max(b)
}

/// Unitary factor of the polar decomposition, `U Vᴴ` from `M = U Σ Vᴴ`.
pub fn polar_unitary(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    u * v_t
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn frobenius_sq(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |a, z| a + z.norm_sqr())
}
