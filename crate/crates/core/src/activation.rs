use crate::error::{ElmError, Result};

/// Hidden node activation.
///
/// `Sigmoid`, `Sine`, `Relu` and `Identity` are additive nodes evaluated on
/// `x·w + b`. `GaussianRbf` is a radial node evaluated on `b·‖x − w‖` with
/// `g(u) = exp(−u²)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActivationKind {
    Sigmoid,
    Sine,
    GaussianRbf,
    Relu,
    Identity,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 5] = [
        ActivationKind::Sigmoid,
        ActivationKind::Sine,
        ActivationKind::GaussianRbf,
        ActivationKind::Relu,
        ActivationKind::Identity,
    ];

    #[inline]
    pub fn apply(self, u: f64) -> f64 {
        match self {
            ActivationKind::Sigmoid => 1.0 / (1.0 + (-u).exp()),
            ActivationKind::Sine => u.sin(),
            ActivationKind::GaussianRbf => (-u * u).exp(),
            ActivationKind::Relu => u.max(0.0),
            ActivationKind::Identity => u,
        }
    }

    pub fn is_radial(self) -> bool {
        self == ActivationKind::GaussianRbf
    }

    /// Stable id used in model files.
    pub fn id(self) -> u32 {
        match self {
            ActivationKind::Sigmoid => 0,
            ActivationKind::Sine => 1,
            ActivationKind::GaussianRbf => 2,
            ActivationKind::Relu => 3,
            ActivationKind::Identity => 4,
        }
    }

    pub fn from_id(id: u32) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.id() == id)
            .ok_or_else(|| ElmError::Format(format!("unknown activation id {id}")))
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Sine => "sine",
            ActivationKind::GaussianRbf => "rbf",
            ActivationKind::Relu => "relu",
            ActivationKind::Identity => "identity",
        }
    }

    /// Bias giving a node with zero input weights a constant output of
    /// `g(bias) ≠ 0`; used for the optional intercept unit.
    pub(crate) fn constant_unit_bias(self) -> f64 {
        match self {
            ActivationKind::Sine => std::f64::consts::FRAC_PI_2,
            // exp(-(0·‖x‖)²) = 1
            ActivationKind::GaussianRbf => 0.0,
            ActivationKind::Sigmoid => 0.0,
            ActivationKind::Relu | ActivationKind::Identity => 1.0,
        }
    }
}

impl std::str::FromStr for ActivationKind {
    type Err = ElmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(ActivationKind::Sigmoid),
            "sine" | "sin" | "fourier" => Ok(ActivationKind::Sine),
            "rbf" | "gaussian" | "gaussian_rbf" => Ok(ActivationKind::GaussianRbf),
            "relu" => Ok(ActivationKind::Relu),
            "identity" | "linear" => Ok(ActivationKind::Identity),
            other => Err(ElmError::Numeric(format!("unknown activation {other:?}"))),
        }
    }
}

impl std::fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values() {
        assert_eq!(ActivationKind::Sigmoid.apply(0.0), 0.5);
        assert_eq!(ActivationKind::Relu.apply(-0.5), 0.0);
        assert_eq!(ActivationKind::Relu.apply(0.25), 0.25);
        assert_eq!(ActivationKind::GaussianRbf.apply(0.0), 1.0);
        assert!((ActivationKind::GaussianRbf.apply(2.0) - (-4f64).exp()).abs() < 1e-16);
        assert!((ActivationKind::Sine.apply(1.0) - 1f64.sin()).abs() < 1e-16);
    }

    #[test]
    fn ids_and_names_round_trip() {
        for a in ActivationKind::ALL {
            assert_eq!(ActivationKind::from_id(a.id()).unwrap(), a);
            assert_eq!(a.name().parse::<ActivationKind>().unwrap(), a);
        }
        assert!(ActivationKind::from_id(99).is_err());
    }

    #[test]
    fn constant_units_are_nonzero() {
        for a in ActivationKind::ALL {
            let bias = a.constant_unit_bias();
            let out = if a.is_radial() { a.apply(bias * 3.7) } else { a.apply(bias) };
            assert!(out.abs() > 0.1, "{a}");
        }
    }
}
