use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cmatrix::CMatrix;

/// Per-resource-element complex noise variance `N0` for unit-energy symbols.
/// An infinite `es_n0_db` means no noise.
pub fn noise_variance(es_n0_db: f64) -> f64 {
    if es_n0_db.is_infinite() && es_n0_db > 0.0 {
        0.0
    } else {
        10f64.powf(-es_n0_db / 10.0)
    }
}

/// Adds circular complex Gaussian noise of variance `N0` per entry
/// (`N0 / 2` per real dimension).
pub fn awgn<R: Rng + ?Sized>(grid: &CMatrix, es_n0_db: f64, rng: &mut R) -> CMatrix {
    let n0 = noise_variance(es_n0_db);
    let mut out = grid.clone();
    if n0 == 0.0 {
        return out;
    }
    let s = (n0 / 2.0).sqrt();
    for v in out.data_mut() {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *v += Complex64::new(re * s, im * s);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    #[test]
    fn infinite_snr_is_identity() {
        let g = CMatrix::from_fn(4, 3, |r, c| Complex64::new(r as f64, c as f64));
        assert_eq!(awgn(&g, f64::INFINITY, &mut stream(0, Domain::Test, &[])), g);
    }

    #[test]
    fn zero_db_statistics() {
        let g = CMatrix::zeros(1000, 1000);
        let w = awgn(&g, 0.0, &mut stream(3, Domain::Test, &[]));
        let n = w.data().len() as f64;
        let var = w.energy() / n;
        assert!((var - 1.0).abs() < 0.02);
        let re_var = w.data().iter().map(|v| v.re * v.re).sum::<f64>() / n;
        let im_var = w.data().iter().map(|v| v.im * v.im).sum::<f64>() / n;
        let cross = w.data().iter().map(|v| v.re * v.im).sum::<f64>() / n;
        assert!((re_var - 0.5).abs() < 0.01 && (im_var - 0.5).abs() < 0.01);
        assert!(cross.abs() < 0.01);
    }
}
