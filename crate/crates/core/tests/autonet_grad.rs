use qtl_core::autonet::{
    cross_entropy, cross_entropy_grad, preset, Activation, LayerGraph, LayerKind, Mode, Shape, Tensor,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn input(shape: [usize; 3], seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.iter().product();
    Tensor::new(vec![1, shape[0], shape[1], shape[2]], (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn loss(g: &LayerGraph, x: &Tensor, label: usize) -> f64 {
    let p = g.forward(x, Mode::Eval).unwrap().0;
    cross_entropy(p.sample(0), label).unwrap()
}

fn analytic(g: &LayerGraph, x: &Tensor, label: usize) -> Vec<Vec<f64>> {
    let (p, tape) = g.forward(x, Mode::Eval).unwrap();
    let grad = Tensor::new(p.shape().to_vec(), cross_entropy_grad(p.sample(0), label)).unwrap();
    g.backward(&tape, &grad).unwrap().tensors().iter().map(|t| t.to_vec()).collect()
}

fn close(a: f64, n: f64) -> bool {
    (a - n).abs() <= 1e-5 * a.abs().max(n.abs()).max(1e-3)
}

fn fd_check(g: &mut LayerGraph, x: &Tensor, label: usize, pick: impl Fn(usize, &[f64]) -> Vec<usize>) -> usize {
    let h = 1e-6;
    let grads = analytic(g, x, label);
    let mut checked = 0;
    for (t, ga) in grads.iter().enumerate() {
        for j in pick(t, ga) {
            let orig = g.trainable_tensors_mut()[t][j];
            g.trainable_tensors_mut()[t][j] = orig + h;
            let up = loss(g, x, label);
            g.trainable_tensors_mut()[t][j] = orig - h;
            let down = loss(g, x, label);
            g.trainable_tensors_mut()[t][j] = orig;
            let fd = (up - down) / (2.0 * h);
            assert!(close(ga[j], fd), "tensor {t} index {j}: analytic {} vs numeric {fd}", ga[j]);
            checked += 1;
        }
    }
    checked
}

#[test]
fn small_conv_net_every_parameter() {
    use LayerKind as L;
    let relu = L::Activation(Activation::Relu);
    let kinds = [
        L::conv(1, 3, 3, 2),
        relu,
        L::pool(2, 1),
        L::conv(3, 4, 2, 1),
        L::Activation(Activation::Tanh),
        L::Flatten,
        L::dense(36, 8),
        relu,
        L::Dropout { p: 0.3 },
        L::dense(8, 2),
        L::Activation(Activation::Softmax),
    ];
    let mut g = LayerGraph::new("small", [1, 11, 11], &kinds, 5).unwrap();
    assert_eq!(g.output_shape().unwrap(), Shape::Flat(2));
    let x = input([1, 11, 11], 6);
    let n = fd_check(&mut g, &x, 1, |_, ga| (0..ga.len()).collect());
    assert_eq!(n, g.param_count());
}

/// Largest-magnitude entries plus an even stride through the tensor.
fn cm2_subset(ga: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ga.len()).collect();
    order.sort_by(|&a, &b| ga[b].abs().total_cmp(&ga[a].abs()));
    let mut picks: Vec<usize> = order.into_iter().take(3).collect();
    let stride = (ga.len() / 3).max(1);
    picks.extend((0..ga.len()).step_by(stride).take(3));
    picks.sort_unstable();
    picks.dedup();
    picks
}

#[test]
fn cm2_gradients_match_finite_differences() {
    let mut g = preset("CM-2", 7).unwrap();
    let x = input([1, 200, 200], 7);
    let n = fd_check(&mut g, &x, 0, |_, ga| cm2_subset(ga));
    assert!(n >= 48, "checked {n} parameters");
}

#[test]
fn cm2_output_shape_and_distribution() {
    let g = preset("CM-2", 7).unwrap();
    let p = g.forward(&input([1, 200, 200], 1), Mode::Eval).unwrap().0;
    assert_eq!(p.shape(), &[1, 2]);
    assert!((p.data().iter().sum::<f64>() - 1.0).abs() < 1e-9);
}
