//! Zeros `j_{n,m}` of the Bessel functions of the first kind, which fix the
//! Dirichlet spectrum of the disk: `λ = j²_{n,m} / r²`, simple for `n = 0`
//! and double for `n ≥ 1`.
//!
//! Generated with
//! ```text
//! from scipy.special import jn_zeros
//! zs = sorted((z, n, m + 1) for n in range(16) for m, z in enumerate(jn_zeros(n, 8)))[:20]
//! ```
//! The table holds every zero below 13.02, so the spectrum it implies is
//! complete for the first 36 eigenvalues counted with multiplicity.

/// `(n, m, j_{n,m})`, ascending.
pub const BESSEL_ZEROS: [(u32, u32, f64); 20] = [
    (0, 1, 2.404825557695772),
    (1, 1, 3.831705970207512),
    (2, 1, 5.135622301840683),
    (0, 2, 5.520078110286311),
    (3, 1, 6.380161895923984),
    (1, 2, 7.015586669815619),
    (4, 1, 7.588342434503804),
    (2, 2, 8.417244140399866),
    (0, 3, 8.653727912911013),
    (5, 1, 8.771483815959954),
    (3, 2, 9.761023129981670),
    (6, 1, 9.936109524217686),
    (1, 3, 10.173468135062722),
    (4, 2, 11.064709488501185),
    (7, 1, 11.086370019245084),
    (2, 3, 11.619841172149060),
    (0, 4, 11.791534439014281),
    (8, 1, 12.225092264004656),
    (5, 2, 12.338604197466944),
    (3, 3, 13.015200721698434),
];

/// First zero `j_{0,1}`.
pub const J01: f64 = BESSEL_ZEROS[0].2;

/// Largest `k` for which [`disk_zero`] is available.
pub const MAX_DISK_INDEX: usize = 36;

/// `j` such that the `k`-th (1-based, with multiplicity) Dirichlet eigenvalue
/// of the unit disk is `j²`.
pub fn disk_zero(k: usize) -> Option<f64> {
    if k == 0 || k > MAX_DISK_INDEX {
        return None;
    }
    let mut seen = 0;
    for &(n, _, z) in &BESSEL_ZEROS {
        seen += if n == 0 { 1 } else { 2 };
        if seen >= k {
            return Some(z);
        }
    }
    None
}

/// `λ_k(B_r)` for the Laplacian.
pub fn disk_eigenvalue(k: usize, r: f64) -> Option<f64> {
    disk_zero(k).map(|j| j * j / (r * r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_and_multiplicities() {
        assert!(BESSEL_ZEROS.windows(2).all(|w| w[0].2 < w[1].2));
        assert_eq!(disk_zero(1), Some(J01));
        assert_eq!(disk_zero(2), disk_zero(3));
        assert_eq!(disk_zero(4), disk_zero(5));
        assert_eq!(disk_zero(6), Some(5.520078110286311));
        assert_eq!(disk_zero(36), Some(13.015200721698434));
        assert_eq!(disk_zero(37), None);
    }
}
