//! Named identity residuals collected by the verification routines.

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Residual {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Residuals {
    pub items: Vec<Residual>,
}

impl Residuals {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: f64) {
        self.items.push(Residual {
            name: name.into(),
            value,
        });
    }

    pub fn extend(&mut self, other: Residuals) {
        self.items.extend(other.items);
    }

    /// Largest value; NaN counts as infinitely bad.
    pub fn max(&self) -> f64 {
        self.items
            .iter()
            .map(|r| if r.value.is_nan() { f64::INFINITY } else { r.value })
            .fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.items.iter().find(|r| r.name == name).map(|r| r.value)
    }

    /// Largest value among entries whose name starts with `prefix`.
    pub fn max_with_prefix(&self, prefix: &str) -> f64 {
        self.items
            .iter()
            .filter(|r| r.name.starts_with(prefix))
            .map(|r| if r.value.is_nan() { f64::INFINITY } else { r.value })
            .fold(0.0, f64::max)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Residual> {
        self.items.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}
