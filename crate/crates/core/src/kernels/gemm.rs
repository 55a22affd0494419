//! Dense matrix multiply with bias and activation — the workhorse every
//! "other" pipeline step (ray setup, MLP layers, SH color, blending algebra)
//! lowers to.

use crate::error::{CoreError, Result};
use crate::scene::Activation;

/// `inputs` is M×K row-major, `weights` K×N row-major, `bias` length N.
/// Accumulation runs in fixed K-ascending order so results are bit-stable and
/// exactly reproducible by a naive triple loop.
pub fn gemm(
    inputs: &[f64],
    m: usize,
    k: usize,
    weights: &[f64],
    n: usize,
    bias: &[f64],
    activation: Activation,
) -> Result<Vec<f64>> {
    if inputs.len() != m * k {
        return Err(CoreError::Contract(format!(
            "gemm inputs: {} values, expected {m}x{k}",
            inputs.len()
        )));
    }
    if weights.len() != k * n {
        return Err(CoreError::Contract(format!(
            "gemm weights: {} values, expected {k}x{n}",
            weights.len()
        )));
    }
    if bias.len() != n {
        return Err(CoreError::Contract(format!(
            "gemm bias: {} values, expected {n}",
            bias.len()
        )));
    }
    let mut out = vec![0.0f64; m * n];
    for row in 0..m {
        let input_row = &inputs[row * k..][..k];
        let out_row = &mut out[row * n..][..n];
        for (kk, &x) in input_row.iter().enumerate() {
            let w_row = &weights[kk * n..][..n];
            for (o, &w) in out_row.iter_mut().zip(w_row) {
                *o += x * w;
            }
        }
        for (o, &b) in out_row.iter_mut().zip(bias) {
            *o = activation.apply(*o + b);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weights_pass_inputs_through() {
        let m = 3;
        let k = 4;
        let inputs: Vec<f64> = (0..m * k).map(|i| i as f64 * 0.5 - 2.0).collect();
        let mut weights = vec![0.0; k * k];
        for i in 0..k {
            weights[i * k + i] = 1.0;
        }
        let out = gemm(
            &inputs,
            m,
            k,
            &weights,
            k,
            &vec![0.0; k],
            Activation::Linear,
        )
        .unwrap();
        assert_eq!(out, inputs);
    }

    #[test]
    fn zero_weights_yield_bias_rows() {
        let bias = vec![1.0, -2.0];
        let out = gemm(
            &[3.0, 4.0, 5.0, 6.0],
            2,
            2,
            &[0.0; 4],
            2,
            &bias,
            Activation::Linear,
        )
        .unwrap();
        assert_eq!(out, vec![1.0, -2.0, 1.0, -2.0]);
        // Relu clips the negative bias column.
        let out = gemm(&[3.0, 4.0], 1, 2, &[0.0; 4], 2, &bias, Activation::Relu).unwrap();
        assert_eq!(out, vec![1.0, 0.0]);
    }

    #[test]
    fn shape_mismatch_is_a_contract_error() {
        assert!(gemm(&[1.0; 5], 2, 3, &[0.0; 6], 2, &[0.0; 2], Activation::Linear).is_err());
        assert!(gemm(&[1.0; 6], 2, 3, &[0.0; 5], 2, &[0.0; 2], Activation::Linear).is_err());
        assert!(gemm(&[1.0; 6], 2, 3, &[0.0; 6], 2, &[0.0; 3], Activation::Linear).is_err());
    }

    #[test]
    fn matches_naive_triple_loop_exactly() {
        let (m, k, n) = (4, 3, 2);
        let inputs: Vec<f64> = (0..m * k)
            .map(|i| ((i * 7 % 11) as f64) * 0.31 - 1.0)
            .collect();
        let weights: Vec<f64> = (0..k * n)
            .map(|i| ((i * 5 % 7) as f64) * 0.17 - 0.4)
            .collect();
        let bias: Vec<f64> = (0..n).map(|i| i as f64 * 0.2).collect();
        let got = gemm(&inputs, m, k, &weights, n, &bias, Activation::Sigmoid).unwrap();
        for row in 0..m {
            for col in 0..n {
                let mut acc = 0.0;
                for kk in 0..k {
                    acc += inputs[row * k + kk] * weights[kk * n + col];
                }
                let want = Activation::Sigmoid.apply(acc + bias[col]);
                assert_eq!(got[row * n + col], want, "({row},{col})");
            }
        }
    }
}
