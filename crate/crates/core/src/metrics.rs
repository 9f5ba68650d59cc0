//! Plain error metrics between single-channel images.

use crate::image::Image;

/// Mean absolute error.
pub fn mae(a: &Image, b: &Image) -> f64 {
    assert!(a.same_dims(b) && a.channels() == b.channels());
    let n = a.data().len() as f64;
    a.data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x as f64 - y as f64).abs())
        .sum::<f64>()
        / n
}

/// Root mean square error.
pub fn rmse(a: &Image, b: &Image) -> f64 {
    assert!(a.same_dims(b) && a.channels() == b.channels());
    let n = a.data().len() as f64;
    (a.data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
}

/// MAE over pixels where `mask > 0`; returns 0 when the mask is empty.
pub fn mae_masked(a: &Image, b: &Image, mask: &Image) -> f64 {
    assert!(a.same_dims(b) && a.same_dims(mask));
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for i in 0..a.data().len() {
        if mask.data()[i] > 0.0 {
            sum += (a.data()[i] as f64 - b.data()[i] as f64).abs();
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}
