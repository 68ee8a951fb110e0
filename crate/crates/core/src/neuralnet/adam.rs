use super::{Gradients, MlpParams, NetError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self { lr: 0.001, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First/second moment accumulators, one per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub hyper: AdamHyper,
    pub step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    /// Zeroed moments shaped like `tensors`.
    pub fn for_tensors<'a>(hyper: AdamHyper, tensors: impl Iterator<Item = &'a [f64]>) -> Self {
        let first: Vec<Vec<f64>> = tensors.map(|t| vec![0.0; t.len()]).collect();
        let second = first.clone();
        Self { hyper, step: 0, first, second }
    }

    pub fn new(hyper: AdamHyper, params: &MlpParams) -> Self {
        Self::for_tensors(hyper, params.tensors())
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn update<'a, 'b>(
        &mut self,
        params: impl Iterator<Item = &'a mut [f64]>,
        grads: impl Iterator<Item = &'b [f64]>,
    ) -> Result<(), NetError> {
        self.step += 1;
        let AdamHyper { lr, beta1, beta2, eps } = self.hyper;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        let mut seen = 0;
        for (((p, g), m), v) in params.zip(grads).zip(&mut self.first).zip(&mut self.second) {
            if p.len() != g.len() || p.len() != m.len() {
                return Err(NetError::Shape(format!(
                    "adam tensor {seen}: {} params, {} grads, {} moments",
                    p.len(),
                    g.len(),
                    m.len()
                )));
            }
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            seen += 1;
        }
        if seen != self.first.len() {
            return Err(NetError::Shape(format!(
                "adam expected {} tensors, got {seen}",
                self.first.len()
            )));
        }
        Ok(())
    }
}

/// Applies one Adam step to a network.
pub fn adam_step(
    params: &mut MlpParams,
    grads: &Gradients,
    state: &mut AdamState,
) -> Result<(), NetError> {
    state.update(params.tensors_mut(), grads.tensors())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_scalar(state: &mut AdamState, x: &mut f64, g: f64) {
        let mut p = [*x];
        state.update(std::iter::once(&mut p[..]), std::iter::once(&[g][..])).unwrap();
        *x = p[0];
    }

    #[test]
    fn zero_gradient_leaves_parameter() {
        let mut s = AdamState::for_tensors(AdamHyper::default(), std::iter::once(&[0.0][..]));
        let mut x = 1.5;
        step_scalar(&mut s, &mut x, 0.0);
        assert_eq!(x, 1.5);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut s = AdamState::for_tensors(AdamHyper::default(), std::iter::once(&[0.0][..]));
        let mut x = 0.0;
        step_scalar(&mut s, &mut x, 1.0);
        // m_hat = v_hat = 1 -> step = lr / (1 + eps)
        assert!((x + 0.001 / (1.0 + 1e-8)).abs() < 1e-18);
    }

    #[test]
    fn three_steps_match_hand_recurrence() {
        let h = AdamHyper::default();
        let grads = [0.5, -1.0, 2.0];
        let mut s = AdamState::for_tensors(h, std::iter::once(&[0.0][..]));
        let mut x = 0.3;
        for g in grads {
            step_scalar(&mut s, &mut x, g);
        }
        // Hand iteration:
        // t=1: m=0.05, v=0.00025, m^=0.5, v^=0.25 -> x=0.3-0.001*0.5/(0.5+1e-8)
        // t=2: m=0.045-0.1=-0.055, v=0.00024975+0.001=0.00124975
        // t=3: m=-0.0495+0.2=0.1505, v=0.00124850025+0.004=0.00524850025
        let mut expect = 0.3;
        expect -= 0.001 * 0.5 / (0.25_f64.sqrt() + 1e-8);
        let (m2, v2) = (-0.055_f64, 0.00124975_f64);
        expect -= 0.001 * (m2 / (1.0 - 0.81)) / ((v2 / (1.0 - 0.998001)).sqrt() + 1e-8);
        let (m3, v3) = (0.1505_f64, 0.00524850025_f64);
        expect -= 0.001 * (m3 / (1.0 - 0.729)) / ((v3 / (1.0 - 0.997002999)).sqrt() + 1e-8);
        assert!((x - expect).abs() < 1e-12, "{x} vs {expect}");
    }

    #[test]
    fn tensor_count_mismatch_is_an_error() {
        let mut s = AdamState::for_tensors(AdamHyper::default(), [&[0.0][..], &[0.0][..]].into_iter());
        let mut p = [0.0];
        let err = s.update(std::iter::once(&mut p[..]), std::iter::once(&[1.0][..]));
        assert!(err.is_err());
    }
}
