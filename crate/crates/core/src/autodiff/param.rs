use rand::Rng;

use crate::error::{Error, Result};

/// Index of a parameter inside its owning [`ParamSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A learnable tensor with its gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor {
    pub name: String,
    shape: Vec<usize>,
    pub values: Vec<f64>,
    pub gradient: Vec<f64>,
}

impl ParamTensor {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::shape(
                "param",
                format!("{name}: shape {shape:?} must be non-empty and positive"),
            ));
        }
        let len: usize = shape.iter().product();
        if values.len() != len {
            return Err(Error::shape(
                "param",
                format!("{name}: {} values for shape {shape:?}", values.len()),
            ));
        }
        Ok(ParamTensor {
            name,
            gradient: vec![0.0; len],
            shape,
            values,
        })
    }

    pub fn zeros(name: impl Into<String>, shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self::new(name, shape, vec![0.0; len]).expect("shape checked by caller")
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn zero_gradient(&mut self) {
        self.gradient.iter_mut().for_each(|g| *g = 0.0);
    }
}

/// Flat collection of parameters addressed by [`ParamId`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    params: Vec<ParamTensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, param: ParamTensor) -> ParamId {
        self.params.push(param);
        ParamId(self.params.len() - 1)
    }

    /// Adds a parameter initialized uniformly in `[-a, a]`, `a = sqrt(6 / (fan_in + fan_out))`.
    pub fn add_glorot(
        &mut self,
        name: impl Into<String>,
        shape: Vec<usize>,
        fan_in: usize,
        fan_out: usize,
        rng: &mut impl Rng,
    ) -> ParamId {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let len: usize = shape.iter().product();
        let values = (0..len).map(|_| rng.random_range(-bound..=bound)).collect();
        self.add(ParamTensor::new(name, shape, values).expect("length matches shape"))
    }

    pub fn add_zeros(&mut self, name: impl Into<String>, shape: Vec<usize>) -> ParamId {
        self.add(ParamTensor::zeros(name, shape))
    }

    pub fn get(&self, id: ParamId) -> &ParamTensor {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut ParamTensor {
        &mut self.params[id.0]
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ParamTensor> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut ParamTensor> {
        self.params.iter_mut()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn scalar_count(&self) -> usize {
        self.params.iter().map(ParamTensor::len).sum()
    }

    pub fn zero_gradients(&mut self) {
        self.params.iter_mut().for_each(ParamTensor::zero_gradient);
    }

    /// Adds `scale * grads` into the gradient fields.
    pub fn accumulate(&mut self, grads: &Gradients, scale: f64) {
        for (param, g) in self.params.iter_mut().zip(&grads.per_param) {
            if let Some(g) = g {
                for (acc, v) in param.gradient.iter_mut().zip(g) {
                    *acc += scale * v;
                }
            }
        }
    }

    /// Overwrites values from another set with identical names and shapes.
    pub fn load_values_from(&mut self, other: &ParamSet) -> Result<()> {
        if other.len() != self.len() {
            return Err(Error::shape(
                "params",
                format!("expected {} tensors, found {}", self.len(), other.len()),
            ));
        }
        for (mine, theirs) in self.params.iter_mut().zip(&other.params) {
            if mine.name != theirs.name || mine.shape != theirs.shape {
                return Err(Error::shape(
                    "params",
                    format!(
                        "tensor {}{:?} does not match {}{:?}",
                        theirs.name, theirs.shape, mine.name, mine.shape
                    ),
                ));
            }
            mine.values.copy_from_slice(&theirs.values);
        }
        Ok(())
    }
}

/// Gradients produced by one backward pass, detached from the parameters.
///
/// Parameters the loss does not reach stay `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    per_param: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub(crate) fn new(param_count: usize) -> Self {
        Gradients {
            per_param: vec![None; param_count],
        }
    }

    pub(crate) fn slot(&mut self, id: ParamId, len: usize) -> &mut [f64] {
        self.per_param[id.0].get_or_insert_with(|| vec![0.0; len])
    }

    pub fn get(&self, id: ParamId) -> Option<&[f64]> {
        self.per_param.get(id.0)?.as_deref()
    }

    /// Sums another gradient set into this one.
    pub fn add_assign(&mut self, other: &Gradients) {
        for (mine, theirs) in self.per_param.iter_mut().zip(&other.per_param) {
            match (mine.as_mut(), theirs) {
                (Some(m), Some(t)) => m.iter_mut().zip(t).for_each(|(a, b)| *a += b),
                (None, Some(t)) => *mine = Some(t.clone()),
                _ => {}
            }
        }
    }
}
