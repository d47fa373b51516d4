use serde::{Deserialize, Serialize};

/// A named parameter tensor (row-major) with its gradient accumulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub shape: Vec<usize>,
    pub value: Vec<f64>,
    #[serde(skip)]
    pub grad: Vec<f64>,
    pub trainable: bool,
}

impl Param {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, value: Vec<f64>, trainable: bool) -> Self {
        let len: usize = shape.iter().product();
        assert_eq!(len, value.len(), "parameter shape/value mismatch");
        Self {
            name: name.into(),
            shape,
            grad: vec![0.0; len],
            value,
            trainable,
        }
    }

    pub fn zeros(name: impl Into<String>, shape: Vec<usize>, trainable: bool) -> Self {
        let len = shape.iter().product();
        Self::new(name, shape, vec![0.0; len], trainable)
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
    }

    pub fn is_finite(&self) -> bool {
        self.value.iter().all(|v| v.is_finite())
    }
}

/// Anything that owns a fixed, ordered list of parameters.
pub trait Parameterized {
    fn params(&self) -> Vec<&Param>;
    fn params_mut(&mut self) -> Vec<&mut Param>;

    fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    fn num_trainable(&self) -> usize {
        self.params().iter().filter(|p| p.trainable).map(|p| p.len()).sum()
    }
}
