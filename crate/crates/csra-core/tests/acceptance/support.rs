//! Shared fixtures for the acceptance suite: seeded random instances and the
//! synthetic localized-signal benchmark.

use csra_core::attention::{ClassifierWeights, FeatureTensor};
use csra_core::label::Label;
use csra_core::tensor::Tensor;
use csra_core::training::LabeledFeatureSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn pass(criterion: &str, detail: &str) {
    println!("acceptance {criterion}: PASS ({detail})");
}

/// One random feature tensor / classifier pair with d <= 8, n <= 16, C <= 5.
pub struct Instance {
    pub x: FeatureTensor,
    pub w: ClassifierWeights,
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let d = rng.random_range(1..=8);
    let h = rng.random_range(1..=4);
    let w = rng.random_range(1..=4);
    let c = rng.random_range(1..=5);
    let x_data: Vec<f64> = (0..d * h * w).map(|_| rng.random_range(-2.0..2.0)).collect();
    let w_data: Vec<f64> = (0..c * d).map(|_| rng.random_range(-2.0..2.0)).collect();
    Instance {
        x: FeatureTensor::new(Tensor::new(vec![d, h, w], x_data).unwrap()).unwrap(),
        w: ClassifierWeights::new(Tensor::new(vec![c, d], w_data).unwrap()).unwrap(),
    }
}

/// Synthetic multi-label benchmark: each present class plants its signature
/// vector in 1..=3 random grid cells on top of Gaussian background noise.
pub struct SynthSpec {
    pub channels: usize,
    pub grid: usize,
    pub classes: usize,
    pub amplitude: f64,
    pub noise: f64,
    pub presence: f64,
}

pub const BENCHMARK: SynthSpec = SynthSpec {
    channels: 16,
    grid: 7,
    classes: 6,
    amplitude: 6.0,
    noise: 1.0,
    presence: 0.35,
};

/// Orthonormal class signatures: class `c` occupies channels `2c` and `2c+1`.
fn signature(spec: &SynthSpec, class: usize) -> Vec<f64> {
    let mut u = vec![0.0; spec.channels];
    let value = 1.0 / 2f64.sqrt();
    u[2 * class] = value;
    u[2 * class + 1] = value;
    u
}

fn sample(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> (FeatureTensor, Vec<Label>) {
    let n = spec.grid * spec.grid;
    let normal = Normal::new(0.0, spec.noise).unwrap();
    // Channel-major layout [d, grid, grid].
    let mut data: Vec<f64> = (0..spec.channels * n)
        .map(|_| normal.sample(rng))
        .collect();
    let mut labels = Vec::with_capacity(spec.classes);
    for class in 0..spec.classes {
        let present = rng.random_range(0.0..1.0) < spec.presence;
        labels.push(if present { Label::Positive } else { Label::Negative });
        if !present {
            continue;
        }
        let u = signature(spec, class);
        let cells = rng.random_range(1..=3usize);
        let mut chosen: Vec<usize> = Vec::with_capacity(cells);
        while chosen.len() < cells {
            let cell = rng.random_range(0..n);
            if !chosen.contains(&cell) {
                chosen.push(cell);
            }
        }
        for &cell in &chosen {
            for (ch, &uv) in u.iter().enumerate() {
                data[ch * n + cell] += spec.amplitude * uv;
            }
        }
    }
    let x = FeatureTensor::new(
        Tensor::new(vec![spec.channels, spec.grid, spec.grid], data).unwrap(),
    )
    .unwrap();
    (x, labels)
}

pub fn synthetic_split(
    spec: &SynthSpec,
    seed: u64,
    train_samples: usize,
    test_samples: usize,
) -> (LabeledFeatureSet, LabeledFeatureSet) {
    let mut rng = rng(seed);
    let train: Vec<_> = (0..train_samples).map(|_| sample(spec, &mut rng)).collect();
    let test: Vec<_> = (0..test_samples).map(|_| sample(spec, &mut rng)).collect();
    (
        LabeledFeatureSet::new(train).unwrap(),
        LabeledFeatureSet::new(test).unwrap(),
    )
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
