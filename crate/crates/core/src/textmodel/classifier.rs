use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use super::input::InputRepresentation;
use crate::error::{Error, Result};

pub const NUM_CLASSES: usize = 3;

/// Probabilities below this are clamped before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Trainable tensors of the classifier.
///
/// `H = tanh(F M + b)` row-wise, mean-pooled over rows, then
/// `softmax(pooled W_out + b_out)`. `u_posce` lifts the scalar PosCE profile
/// into the embedding space. Gradients use the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierParams {
    pub m: Array2<f64>,
    pub b: Array1<f64>,
    pub w_out: Array2<f64>,
    pub b_out: Array1<f64>,
    pub u_posce: Array1<f64>,
}

impl ClassifierParams {
    pub fn zeros(dim: usize, hidden: usize) -> Self {
        ClassifierParams {
            m: Array2::zeros((dim, hidden)),
            b: Array1::zeros(hidden),
            w_out: Array2::zeros((hidden, NUM_CLASSES)),
            b_out: Array1::zeros(NUM_CLASSES),
            u_posce: Array1::zeros(dim),
        }
    }

    /// Glorot-uniform weight matrices, zero biases, and a PosCE direction with
    /// entries uniform in `[-posce_scale, posce_scale]`.
    pub fn init<R: Rng>(dim: usize, hidden: usize, posce_scale: f64, rng: &mut R) -> Self {
        let mut p = Self::zeros(dim, hidden);
        let a = (6.0 / (dim + hidden) as f64).sqrt();
        p.m.mapv_inplace(|_| rng.gen_range(-a..=a));
        let a = (6.0 / (hidden + NUM_CLASSES) as f64).sqrt();
        p.w_out.mapv_inplace(|_| rng.gen_range(-a..=a));
        if posce_scale > 0.0 {
            p.u_posce.mapv_inplace(|_| rng.gen_range(-posce_scale..=posce_scale));
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.m.ncols()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.dim(), self.hidden())
    }

    pub fn check_shapes(&self) -> Result<()> {
        let (k, h) = self.m.dim();
        let ok = self.b.len() == h
            && self.w_out.dim() == (h, NUM_CLASSES)
            && self.b_out.len() == NUM_CLASSES
            && self.u_posce.len() == k;
        if ok {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "inconsistent classifier tensors for k = {k}, h = {h}"
            )))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Flat views in a fixed order: `m`, `b`, `w_out`, `b_out`, `u_posce`.
    pub fn tensors(&self) -> [&[f64]; 5] {
        [
            self.m.as_slice().expect("standard layout"),
            self.b.as_slice().expect("standard layout"),
            self.w_out.as_slice().expect("standard layout"),
            self.b_out.as_slice().expect("standard layout"),
            self.u_posce.as_slice().expect("standard layout"),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 5] {
        [
            self.m.as_slice_mut().expect("standard layout"),
            self.b.as_slice_mut().expect("standard layout"),
            self.w_out.as_slice_mut().expect("standard layout"),
            self.b_out.as_slice_mut().expect("standard layout"),
            self.u_posce.as_slice_mut().expect("standard layout"),
        ]
    }

    /// Sum of squares of the weight tensors (`m`, `w_out`, `u_posce`); biases
    /// are not penalised.
    pub fn weight_norm_sq(&self) -> f64 {
        let sq = |s: &[f64]| s.iter().map(|v| v * v).sum::<f64>();
        let t = self.tensors();
        sq(t[0]) + sq(t[2]) + sq(t[4])
    }

    pub fn add_scaled(&mut self, other: &ClassifierParams, scale: f64) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }
}

struct Activations {
    hidden: Array2<f64>,
    pooled: Array1<f64>,
    probs: [f64; NUM_CLASSES],
}

fn run(params: &ClassifierParams, input: &InputRepresentation) -> Result<Activations> {
    let f = input.matrix();
    if f.ncols() != params.dim() {
        return Err(Error::Shape(format!(
            "input has dimension {}, classifier expects {}",
            f.ncols(),
            params.dim()
        )));
    }
    if f.nrows() == 0 {
        return Err(Error::invalid("input", "empty sentence"));
    }
    if !f.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("classifier input"));
    }
    if !params.is_finite() {
        return Err(Error::NonFinite("classifier parameters"));
    }

    let mut hidden = f.dot(&params.m) + &params.b;
    hidden.mapv_inplace(f64::tanh);
    let pooled = hidden.mean_axis(Axis(0)).expect("nonempty");
    let logits = pooled.dot(&params.w_out) + &params.b_out;
    let probs = softmax3(&logits);
    Ok(Activations { hidden, pooled, probs })
}

fn softmax3(logits: &Array1<f64>) -> [f64; NUM_CLASSES] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; NUM_CLASSES];
    let mut total = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        total += *o;
    }
    for o in &mut out {
        *o /= total;
    }
    out
}

/// Class probabilities for one input.
pub fn forward(params: &ClassifierParams, input: &InputRepresentation) -> Result<[f64; NUM_CLASSES]> {
    Ok(run(params, input)?.probs)
}

#[derive(Debug, Clone)]
pub struct LossOutput {
    pub loss: f64,
    pub gradients: ClassifierParams,
    pub probs: [f64; NUM_CLASSES],
    /// True when the label probability fell below [`PROB_FLOOR`].
    pub clamped: bool,
}

/// Cross-entropy plus `l2 * ||weights||^2`, with exact analytic gradients for
/// every tensor including `u_posce`.
pub fn loss_and_gradients(
    params: &ClassifierParams,
    input: &InputRepresentation,
    label: usize,
    l2: f64,
) -> Result<LossOutput> {
    if label >= NUM_CLASSES {
        return Err(Error::invalid("label", format!("class index {label} not in 0..3")));
    }
    if !(l2 >= 0.0) {
        return Err(Error::invalid("l2", format!("must be non-negative, got {l2}")));
    }
    let act = run(params, input)?;
    let p_label = act.probs[label];
    let clamped = p_label < PROB_FLOOR;
    let loss = -p_label.max(PROB_FLOOR).ln() + l2 * params.weight_norm_sq();

    let mut grads = params.zeros_like();
    if !clamped {
        let mut d_logits = Array1::from(act.probs.to_vec());
        d_logits[label] -= 1.0;

        grads.b_out.assign(&d_logits);
        grads.w_out = outer(&act.pooled, &d_logits);

        let d_pooled = params.w_out.dot(&d_logits);
        let rows = act.hidden.nrows() as f64;
        // dZ = (dpooled / L) * (1 - H^2), row by row.
        let mut d_z = act.hidden.mapv(|h| 1.0 - h * h);
        for mut row in d_z.axis_iter_mut(Axis(0)) {
            row *= &(&d_pooled / rows);
        }
        grads.m = input.matrix().t().dot(&d_z);
        grads.b = d_z.sum_axis(Axis(0));

        let d_f = d_z.dot(&params.m.t());
        let profile = Array1::from(input.profile().to_vec());
        grads.u_posce = profile.dot(&d_f);
    }

    if l2 > 0.0 {
        grads.m.scaled_add(2.0 * l2, &params.m);
        grads.w_out.scaled_add(2.0 * l2, &params.w_out);
        grads.u_posce.scaled_add(2.0 * l2, &params.u_posce);
    }

    Ok(LossOutput {
        loss,
        gradients: grads,
        probs: act.probs,
        clamped,
    })
}

fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((a.len(), b.len()));
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[[i, j]] = x * y;
        }
    }
    out
}

/// Index of the largest probability, ties toward the lowest class.
pub fn argmax(probs: &[f64; NUM_CLASSES]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textmodel::input::compose_input;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_input(rng: &mut ChaCha8Rng, len: usize, dim: usize, u: &Array1<f64>) -> InputRepresentation {
        let rows = Array2::from_shape_fn((len, dim), |_| rng.gen_range(-1.0..1.0));
        let profile: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..1.0)).collect();
        compose_input(&rows, &profile, u, 0).unwrap()
    }

    #[test]
    fn zero_params_are_uniform() {
        let params = ClassifierParams::zeros(4, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let input = random_input(&mut rng, 5, 4, &params.u_posce);
        let probs = forward(&params, &input).unwrap();
        for p in probs {
            assert_abs_diff_eq!(p, 1.0 / 3.0, epsilon = 1e-15);
        }
        for label in 0..3 {
            let out = loss_and_gradients(&params, &input, label, 0.0).unwrap();
            assert_abs_diff_eq!(out.loss, 3f64.ln(), epsilon = 1e-12);
        }
    }

    #[test]
    fn output_bias_shift_is_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let params = ClassifierParams::init(6, 5, 1.0, &mut rng);
        let input = random_input(&mut rng, 4, 6, &params.u_posce);
        let mut shifted = params.clone();
        shifted.b_out += 12.5;
        let a = forward(&params, &input).unwrap();
        let b = forward(&shifted, &input).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(a[i], b[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn probabilities_form_a_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let mut params = ClassifierParams::init(4, 6, 1.0, &mut rng);
            params.w_out *= 10.0;
            let input = random_input(&mut rng, 7, 4, &params.u_posce);
            let probs = forward(&params, &input).unwrap();
            assert!(probs.iter().all(|&p| p > 0.0));
            assert_abs_diff_eq!(probs.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn penalty_gradient_without_data_signal() {
        // Zero output weights cut the data gradient to M and u; only the
        // penalty remains.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut params = ClassifierParams::init(4, 3, 1.0, &mut rng);
        params.w_out.fill(0.0);
        let input = random_input(&mut rng, 3, 4, &params.u_posce);
        let l2 = 0.01;
        let out = loss_and_gradients(&params, &input, 1, l2).unwrap();
        for (g, w) in out.gradients.m.iter().zip(params.m.iter()) {
            assert_abs_diff_eq!(*g, 2.0 * l2 * w, epsilon = 1e-15);
        }
        for (g, w) in out.gradients.u_posce.iter().zip(params.u_posce.iter()) {
            assert_abs_diff_eq!(*g, 2.0 * l2 * w, epsilon = 1e-15);
        }
    }

    #[test]
    fn saturated_label_is_clamped() {
        let mut params = ClassifierParams::zeros(2, 1);
        params.b_out[0] = 100.0;
        let rows = Array2::zeros((1, 2));
        let input = compose_input(&rows, &[0.0], &params.u_posce, 0).unwrap();
        let out = loss_and_gradients(&params, &input, 2, 0.0).unwrap();
        assert!(out.clamped);
        assert_abs_diff_eq!(out.loss, -PROB_FLOOR.ln(), epsilon = 1e-9);
    }

    #[test]
    fn rejects_bad_label_and_non_finite() {
        let params = ClassifierParams::zeros(2, 2);
        let rows = Array2::zeros((1, 2));
        let input = compose_input(&rows, &[0.0], &params.u_posce, 0).unwrap();
        assert!(loss_and_gradients(&params, &input, 3, 0.0).is_err());
        let mut bad = params.clone();
        bad.m[[0, 0]] = f64::NAN;
        assert!(matches!(forward(&bad, &input), Err(Error::NonFinite(_))));
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[0.4, 0.4, 0.2]), 0);
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[0.1, 0.2, 0.7]), 2);
    }
}
