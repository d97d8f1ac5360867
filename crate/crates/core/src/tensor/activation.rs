use super::Tensor;

pub const DEFAULT_SLOPE: f64 = 0.01;

pub fn leaky_relu(input: &Tensor, slope: f64) -> Tensor {
    let mut out = input.clone();
    for v in out.data_mut() {
        if *v < 0.0 {
            *v *= slope;
        }
    }
    out
}

/// Gradient through a leaky ReLU given the saved forward input.
pub fn leaky_relu_backward(grad_out: &Tensor, saved_input: &Tensor, slope: f64) -> Tensor {
    let mut g = grad_out.clone();
    for (gv, &x) in g.data_mut().iter_mut().zip(saved_input.data()) {
        if x < 0.0 {
            *gv *= slope;
        }
    }
    g
}
