use nalgebra::DMatrix;
use num_complex::Complex64;

use super::MomentEstimate;

/// Statistical linear-MMSE detector assembled from effective-channel moments
/// for one user.
#[derive(Debug, Clone)]
pub struct DetectorContext {
    /// Mean effective channel `D_k`.
    pub effective: DMatrix<Complex64>,
    /// `sum_k' E{C_kk' C_kk'^H} + sigma^2 I`.
    pub received: DMatrix<Complex64>,
    pub noise_power: f64,
}

impl DetectorContext {
    pub fn from_moments(moments: &MomentEstimate, k: usize, noise_power: f64) -> Self {
        let n_u = moments.effective[k].nrows();
        let mut received = moments.second_moment[k].clone();
        received += DMatrix::<Complex64>::identity(n_u, n_u) * Complex64::new(noise_power, 0.0);
        let h = received.adjoint();
        received = (&received + h) * Complex64::new(0.5, 0.0);
        Self {
            effective: moments.effective[k].clone(),
            received,
            noise_power,
        }
    }

    /// Detector column `f_kn = (sum_k' E{C C^H} + sigma^2 I)^{-1} d_kn`.
    pub fn detector(&self, n: usize) -> Option<DMatrix<Complex64>> {
        let d = DMatrix::from_column_slice(self.effective.nrows(), 1, self.effective.column(n).as_slice());
        self.received.clone().cholesky().map(|ch| ch.solve(&d))
    }

    /// `|f^H d|^2 / (f^H (sum E{CC^H} + sigma^2 I) f - |f^H d|^2)`.
    pub fn sinr(&self, n: usize) -> Option<f64> {
        let f = self.detector(n)?;
        let d = self.effective.column(n);
        let fd = (f.adjoint() * d)[(0, 0)].norm_sqr();
        let fsf = (f.adjoint() * &self.received * &f)[(0, 0)].re;
        Some(fd / (fsf - fd))
    }

    /// `sum_n log2(1 + SINR_kn)`.
    pub fn linear_se(&self) -> Option<f64> {
        (0..self.effective.ncols())
            .map(|n| self.sinr(n).map(|s| s.ln_1p() / std::f64::consts::LN_2))
            .sum()
    }

    /// `log2 det(I + D^H Sigma^{-1} D)` with
    /// `Sigma = sum E{CC^H} + sigma^2 I - D D^H`.
    pub fn sic_se(&self) -> Option<f64> {
        
        let sigma = &self.received - &self.effective * self.effective.adjoint();
        let sigma = (&sigma + sigma.adjoint()) * Complex64::new(0.5, 0.0);
        let inv_d = sigma.cholesky()?.solve(&self.effective);
        let x = self.effective.adjoint() * inv_d;
        let x = (&x + x.adjoint()) * Complex64::new(0.5, 0.0);
        // eigenvalues of the PSD part; ln_1p keeps precision when 1 + x rounds
        let eig = x.symmetric_eigenvalues();
        Some(eig.iter().map(|l| l.max(0.0).ln_1p() / std::f64::consts::LN_2).sum())
    }
}
