use rand::Rng;

use crate::mask::ObservationMask;
use crate::qmatrix::QMatrix;
use crate::quaternion::Quaternion;

pub fn random_quaternion(rng: &mut impl Rng) -> Quaternion {
    Quaternion::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    )
}

pub fn random_qmatrix(rng: &mut impl Rng, rows: usize, cols: usize) -> QMatrix {
    QMatrix::from_fn(rows, cols, |_, _| random_quaternion(rng))
}

pub fn random_mask(rng: &mut impl Rng, rows: usize, cols: usize, ratio: f64) -> ObservationMask {
    ObservationMask::from_fn(rows, cols, |_, _| rng.random::<f64>() < ratio)
}
