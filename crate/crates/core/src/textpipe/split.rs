use super::LabeledExample;
use crate::numcore::Rng;
use crate::{ensure_contract, Error, Result};

/// Seeded shuffle then split; the validation part has
/// `round(val_fraction · N)` items, kept within `[1, N-1]`.
pub fn split<T: Clone>(data: &[T], val_fraction: f64, rng: &mut Rng) -> Result<(Vec<T>, Vec<T>)> {
    ensure_contract!(
        val_fraction > 0.0 && val_fraction < 1.0,
        "val_fraction {val_fraction} not in (0, 1)"
    );
    if data.len() < 2 {
        return Err(Error::Invalid(format!(
            "cannot split {} example(s) into train and validation",
            data.len()
        )));
    }
    let n = data.len();
    let n_val = ((val_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let val = order[..n_val].iter().map(|&i| data[i].clone()).collect();
    let train = order[n_val..].iter().map(|&i| data[i].clone()).collect();
    Ok((train, val))
}

/// [`split`] specialised to labeled examples.
pub fn split_labeled(
    data: &[LabeledExample],
    val_fraction: f64,
    rng: &mut Rng,
) -> Result<(Vec<LabeledExample>, Vec<LabeledExample>)> {
    split(data, val_fraction, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_partition() {
        let data: Vec<u32> = (0..10).collect();
        let (tr, va) = split(&data, 0.2, &mut Rng::new(1)).unwrap();
        assert_eq!((tr.len(), va.len()), (8, 2));
        let mut all: Vec<u32> = tr.iter().chain(&va).copied().collect();
        all.sort_unstable();
        assert_eq!(all, data);
    }

    #[test]
    fn deterministic_and_floor_protected() {
        let data: Vec<u32> = (0..5).collect();
        let a = split(&data, 0.1, &mut Rng::new(4)).unwrap();
        let b = split(&data, 0.1, &mut Rng::new(4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.1.len(), 1);
    }

    #[test]
    fn too_small() {
        assert!(split(&[1u8], 0.5, &mut Rng::new(0)).is_err());
        assert!(split(&[1u8, 2], 1.0, &mut Rng::new(0)).is_err());
    }
}
