//! The primitive operations of the architecture: n-gram convolution in its
//! valid form, max-pooling, ReLU and stabilized softmax.

use ndarray::{Array1, Array2, Axis};

use super::conv::ConvLayerSpec;
use crate::error::{Error, Result};
use crate::features::EmbeddingSequence;

/// Valid 1-D convolution over token n-grams: output row `i`, column `j` is
/// the inner product of the window `[w_i .. w_{i+l-1}]` with filter `j`,
/// plus the filter bias. Produces `n - l + 1` rows; inputs shorter than
/// the kernel are zero-padded up to one window.
pub fn conv1d_ngram(input: &EmbeddingSequence, layer: &ConvLayerSpec) -> Result<Array2<f64>> {
    if input.dim() != layer.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "conv1d input embedding dimension".into(),
            expected: layer.input_dim(),
            actual: input.dim(),
        });
    }
    let l = layer.kernel_width();
    let d = layer.input_dim();
    let x = input.valid_rows();
    let n = x.nrows().max(l);
    let positions = n - l + 1;

    let mut windows = Array2::zeros((positions, l * d));
    for i in 0..positions {
        for p in 0..l {
            let row = i + p;
            if row < x.nrows() {
                windows
                    .slice_mut(ndarray::s![i, p * d..(p + 1) * d])
                    .assign(&x.row(row));
            }
        }
    }
    Ok(windows.dot(&layer.weights().t()) + layer.bias())
}

/// Column-wise maximum of the feature-map rows.
pub fn max_pool(rows: &Array2<f64>) -> Result<Array1<f64>> {
    if rows.nrows() == 0 {
        return Err(Error::EmptyInput {
            context: "max_pool".into(),
        });
    }
    Ok(rows.fold_axis(Axis(0), f64::NEG_INFINITY, |acc, &v| acc.max(v)))
}

/// Elementwise max(0, x).
pub fn relu(v: &Array1<f64>) -> Array1<f64> {
    v.mapv(|x| x.max(0.0))
}

/// Softmax with max-subtraction so large logits cannot overflow.
pub fn softmax_stable(logits: &Array1<f64>) -> Array1<f64> {
    let max = logits.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let exp = logits.mapv(|z| (z - max).exp());
    let sum = exp.sum();
    exp / sum
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// The spec'd feature-map pair: convolution outputs with their pooled
/// vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub rows: Array2<f64>,
    pub pooled: Array1<f64>,
}

impl FeatureMap {
    pub fn compute(input: &EmbeddingSequence, layer: &ConvLayerSpec) -> Result<Self> {
        let rows = conv1d_ngram(input, layer)?;
        let pooled = max_pool(&rows)?;
        Ok(Self { rows, pooled })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{arr1, arr2, array};

    fn seq(rows: Array2<f64>) -> EmbeddingSequence {
        let n = rows.nrows();
        EmbeddingSequence::new(rows, n).unwrap()
    }

    #[test]
    fn all_ones_filter_over_all_ones_input() {
        // n=3, l=3, d=2: window has 6 entries of 1.0, filter of ones gives 6.
        let input = seq(Array2::ones((3, 2)));
        let layer = ConvLayerSpec::from_filters(vec![Array2::ones((2, 3))], arr1(&[0.0])).unwrap();
        let out = conv1d_ngram(&input, &layer).unwrap();
        assert_eq!(out.shape(), [1, 1]);
        assert_abs_diff_eq!(out[[0, 0]], 6.0, epsilon = 1e-12);
    }

    #[test]
    fn output_position_count_is_n_minus_l_plus_one() {
        let input = seq(Array2::ones((5, 2)));
        let layer = ConvLayerSpec::from_filters(vec![Array2::ones((2, 3))], arr1(&[0.0])).unwrap();
        let out = conv1d_ngram(&input, &layer).unwrap();
        assert_eq!(out.nrows(), 3);
    }

    #[test]
    fn short_input_is_padded_to_one_window() {
        let input = seq(Array2::ones((1, 2)));
        let layer = ConvLayerSpec::from_filters(vec![Array2::ones((2, 3))], arr1(&[0.5])).unwrap();
        let out = conv1d_ngram(&input, &layer).unwrap();
        assert_eq!(out.shape(), [1, 1]);
        // Only the first window position is real: 2 ones + bias.
        assert_abs_diff_eq!(out[[0, 0]], 2.5, epsilon = 1e-12);
    }

    #[test]
    fn matches_brute_force_double_loop() {
        // Random 4-token, d=3 input with 2 random filters, checked against
        // an explicit loop over positions, filters, window offsets and
        // dimensions.
        let input_rows = arr2(&[
            [0.3, -1.2, 0.7],
            [1.1, 0.4, -0.6],
            [-0.2, 0.9, 0.5],
            [0.8, -0.3, 1.4],
        ]);
        let filters = vec![
            arr2(&[[0.2, -0.4], [1.0, 0.3], [-0.7, 0.6]]), // d=3 × l=2
            arr2(&[[-1.1, 0.5], [0.2, -0.2], [0.9, 1.3]]),
        ];
        let bias = arr1(&[0.1, -0.2]);
        let layer = ConvLayerSpec::from_filters(filters.clone(), bias.clone()).unwrap();
        let out = conv1d_ngram(&seq(input_rows.clone()), &layer).unwrap();

        let (n, d, l, m) = (4, 3, 2, 2);
        for i in 0..=(n - l) {
            for j in 0..m {
                let mut acc = bias[j];
                for p in 0..l {
                    for dim in 0..d {
                        acc += input_rows[[i + p, dim]] * filters[j][[dim, p]];
                    }
                }
                assert_abs_diff_eq!(out[[i, j]], acc, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_fatal() {
        let input = seq(Array2::ones((3, 4)));
        let layer = ConvLayerSpec::from_filters(vec![Array2::ones((2, 3))], arr1(&[0.0])).unwrap();
        assert!(matches!(
            conv1d_ngram(&input, &layer),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn max_pool_single_row_is_identity() {
        let rows = array![[1.0, -2.0, 3.0]];
        assert_eq!(max_pool(&rows).unwrap(), arr1(&[1.0, -2.0, 3.0]));
    }

    #[test]
    fn max_pool_columnwise() {
        let rows = array![[1.0, 5.0], [3.0, 2.0]];
        assert_eq!(max_pool(&rows).unwrap(), arr1(&[3.0, 5.0]));
    }

    #[test]
    fn max_pool_is_order_invariant() {
        let rows = array![[1.0, 5.0], [3.0, 2.0], [-1.0, 9.0]];
        let permuted = array![[-1.0, 9.0], [1.0, 5.0], [3.0, 2.0]];
        assert_eq!(max_pool(&rows).unwrap(), max_pool(&permuted).unwrap());
    }

    #[test]
    fn relu_examples() {
        assert_eq!(relu(&arr1(&[-1.0, 0.0, 2.0])), arr1(&[0.0, 0.0, 2.0]));
        assert_eq!(relu(&arr1(&[-3.0, -0.1])), arr1(&[0.0, 0.0]));
        let v = arr1(&[-1.5, 0.2, 7.0]);
        assert_eq!(relu(&relu(&v)), relu(&v));
    }

    #[test]
    fn softmax_of_zero_logits_is_uniform() {
        let p = softmax_stable(&arr1(&[0.0, 0.0]));
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn softmax_survives_huge_logits() {
        let p = softmax_stable(&arr1(&[1000.0, 0.0]));
        assert!(p[0] > 0.999_999);
        assert!(p[1] >= 0.0);
        assert_abs_diff_eq!(p.sum(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn softmax_shift_invariance() {
        let z = arr1(&[0.3, -1.2, 2.5]);
        let shifted = z.mapv(|v| v + 17.5);
        let a = softmax_stable(&z);
        let b = softmax_stable(&shifted);
        for (x, y) in a.iter().zip(b.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn feature_map_pairs_conv_and_pool() {
        let input = seq(Array2::ones((4, 2)));
        let layer = ConvLayerSpec::from_filters(vec![Array2::ones((2, 3))], arr1(&[0.0])).unwrap();
        let fm = FeatureMap::compute(&input, &layer).unwrap();
        assert_eq!(fm.rows.nrows(), 2);
        assert_eq!(fm.pooled.len(), 1);
        assert_abs_diff_eq!(fm.pooled[0], 6.0, epsilon = 1e-12);
    }
}
