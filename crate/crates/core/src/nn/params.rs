use crate::error::{Error, Result};

/// A model whose trainable state is an ordered list of flat tensors.
pub trait Parameters {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;
    /// Logical shape of each tensor, row-major.
    fn shapes(&self) -> Vec<Vec<usize>>;

    fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn copy_from(&mut self, other: &Self) -> Result<()>
    where
        Self: Sized,
    {
        let src = other.tensors();
        let mut dst = self.tensors_mut();
        if src.len() != dst.len() {
            return Err(Error::shape("tensor count differs"));
        }
        for (d, s) in dst.iter_mut().zip(src) {
            if d.len() != s.len() {
                return Err(Error::shape("tensor length differs"));
            }
            d.copy_from_slice(s);
        }
        Ok(())
    }
}

/// Gradients laid out tensor-for-tensor like the [`Parameters`] they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like<P: Parameters + ?Sized>(p: &P) -> Self {
        Gradients {
            tensors: p.tensors().iter().map(|t| vec![0.0; t.len()]).collect(),
        }
    }

    pub fn matches<P: Parameters + ?Sized>(&self, p: &P) -> bool {
        let t = p.tensors();
        t.len() == self.tensors.len() && t.iter().zip(&self.tensors).all(|(a, b)| a.len() == b.len())
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in &mut self.tensors {
            for x in t.iter_mut() {
                *x *= factor;
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.tensors.iter().flatten().all(|&x| x == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors.iter().flatten().fold(0.0, |m, &x| m.max(x.abs()))
    }

    /// Sums a list of gradients in order. Returns `None` for an empty list.
    pub fn sum_ordered(list: Vec<Gradients>) -> Option<Gradients> {
        let mut it = list.into_iter();
        let mut acc = it.next()?;
        for g in it {
            acc.add_assign(&g);
        }
        Some(acc)
    }
}
