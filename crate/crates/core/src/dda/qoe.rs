//! Parametric QoE proxies for VR rendering and the buyer/seller value models.

use serde::{Deserialize, Serialize};

use super::DdaError;

/// Saturating-exponential stand-ins for VMAF and SSIM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QoeParams {
    /// Rate sensitivity of the streaming-quality (VMAF) proxy, per Mbit/s.
    pub alpha: f64,
    /// Rate sensitivity of the image-quality (SSIM) proxy, per Mbit/s.
    pub gamma: f64,
    /// Head-motion penalty per rad/s.
    pub beta: f64,
    pub w_vmaf: f64,
    pub w_ssim: f64,
    /// Currency value of one unit of QoE.
    pub lambda: f64,
}

impl Default for QoeParams {
    fn default() -> Self {
        Self {
            alpha: 0.02,
            gamma: 0.05,
            beta: 1.0,
            w_vmaf: 0.5,
            w_ssim: 0.5,
            lambda: 10.0,
        }
    }
}

impl QoeParams {
    pub fn validate(&self) -> Result<(), DdaError> {
        let positive = [
            ("alpha", self.alpha),
            ("gamma", self.gamma),
            ("beta", self.beta),
            ("lambda", self.lambda),
        ];
        for (field, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(DdaError::invalid(field, format!("must be positive, got {value}")));
            }
        }
        if !(self.w_vmaf >= 0.0 && self.w_ssim >= 0.0) {
            return Err(DdaError::invalid("w_vmaf", "weights must be non-negative"));
        }
        if (self.w_vmaf + self.w_ssim - 1.0).abs() > 1e-9 {
            return Err(DdaError::invalid(
                "w_vmaf",
                format!("weights sum to {}", self.w_vmaf + self.w_ssim),
            ));
        }
        Ok(())
    }
}

/// `(vmaf in [0,100], ssim in [0,1])` for bitrate `b` (Mbit/s) and head speed `omega` (rad/s).
pub fn perceptual_scores(bitrate: f64, head_speed: f64, params: &QoeParams) -> (f64, f64) {
    let effective = bitrate / (1.0 + params.beta * head_speed);
    let vmaf = 100.0 * (1.0 - (-params.alpha * effective).exp());
    let ssim = 1.0 - (-params.gamma * effective).exp();
    (vmaf, ssim)
}

/// A VR user bidding for edge rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VrUser {
    pub id: String,
    pub head_speed: f64,
    pub bitrate: f64,
    pub valuation: f64,
}

impl VrUser {
    pub fn new(id: impl Into<String>, head_speed: f64, bitrate: f64, params: &QoeParams) -> Result<Self, DdaError> {
        let id = id.into();
        if !(head_speed >= 0.0 && head_speed.is_finite()) {
            return Err(DdaError::invalid(
                "head_speed",
                format!("buyer `{id}` has {head_speed}"),
            ));
        }
        if !(bitrate >= 0.0 && bitrate.is_finite()) {
            return Err(DdaError::invalid("bitrate", format!("buyer `{id}` has {bitrate}")));
        }
        let mut user = Self {
            id,
            head_speed,
            bitrate,
            valuation: 0.0,
        };
        user.valuation = buyer_valuation(&user, params);
        Ok(user)
    }

    /// A buyer whose valuation is given directly rather than derived from QoE.
    pub fn with_valuation(id: impl Into<String>, valuation: f64) -> Self {
        Self {
            id: id.into(),
            head_speed: 0.0,
            bitrate: 0.0,
            valuation,
        }
    }
}

/// `lambda * (w_vmaf * VMAF / 100 + w_ssim * SSIM)`.
pub fn buyer_valuation(user: &VrUser, params: &QoeParams) -> f64 {
    let (vmaf, ssim) = perceptual_scores(user.bitrate, user.head_speed, params);
    params.lambda * (params.w_vmaf * vmaf / 100.0 + params.w_ssim * ssim)
}

/// An edge server offering rendering capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSeller {
    pub id: String,
    /// Currency per Mbit/s served.
    pub energy_price: f64,
    /// Fixed compute/storage occupancy charge per service.
    pub base_cost: f64,
    pub cost: f64,
}

impl EdgeSeller {
    pub fn new(id: impl Into<String>, energy_price: f64, base_cost: f64, bitrate: f64) -> Result<Self, DdaError> {
        let id = id.into();
        if !(energy_price >= 0.0 && energy_price.is_finite()) {
            return Err(DdaError::invalid(
                "energy_price",
                format!("seller `{id}` has {energy_price}"),
            ));
        }
        if !(base_cost >= 0.0 && base_cost.is_finite()) {
            return Err(DdaError::invalid("base_cost", format!("seller `{id}` has {base_cost}")));
        }
        let mut seller = Self {
            id,
            energy_price,
            base_cost,
            cost: 0.0,
        };
        seller.cost = seller_cost(&seller, bitrate);
        Ok(seller)
    }

    pub fn with_cost(id: impl Into<String>, cost: f64) -> Self {
        Self {
            id: id.into(),
            energy_price: 0.0,
            base_cost: cost,
            cost,
        }
    }
}

/// `e * b + nu`.
pub fn seller_cost(seller: &EdgeSeller, bitrate: f64) -> f64 {
    seller.energy_price * bitrate + seller.base_cost
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_rate_scores_nothing() {
        let p = QoeParams::default();
        assert_eq!(perceptual_scores(0.0, 1.3, &p), (0.0, 0.0));
        let u = VrUser::new("u", 0.0, 0.0, &p).unwrap();
        assert_eq!(u.valuation, 0.0);
    }

    #[test]
    fn vmaf_reference_values() {
        let p = QoeParams::default();
        let (vmaf, _) = perceptual_scores(50.0, 0.0, &p);
        assert_abs_diff_eq!(vmaf, 100.0 * (1.0 - (-1.0f64).exp()), epsilon = 1e-12);
        assert_abs_diff_eq!(vmaf, 63.21, epsilon = 5e-3);
        let (slow, _) = perceptual_scores(50.0, 9.0, &p);
        assert_abs_diff_eq!(slow, 9.52, epsilon = 5e-3);
    }

    #[test]
    fn valuation_reference_value() {
        let p = QoeParams::default();
        let u = VrUser::new("u", 0.0, 50.0, &p).unwrap();
        let expected = 10.0 * (0.5 * (1.0 - (-1.0f64).exp()) + 0.5 * (1.0 - (-2.5f64).exp()));
        assert_abs_diff_eq!(u.valuation, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(u.valuation, 7.75, epsilon = 5e-3);

        let vmaf_only = QoeParams {
            w_vmaf: 1.0,
            w_ssim: 0.0,
            ..p
        };
        let v = VrUser::new("u", 0.7, 30.0, &vmaf_only).unwrap();
        let (vmaf, _) = perceptual_scores(30.0, 0.7, &vmaf_only);
        assert_abs_diff_eq!(v.valuation, 10.0 * vmaf / 100.0, epsilon = 1e-12);
    }

    #[test]
    fn seller_cost_cases() {
        let s = EdgeSeller::new("s", 0.04, 1.0, 0.0).unwrap();
        assert_eq!(s.cost, 1.0);
        assert_abs_diff_eq!(seller_cost(&s, 50.0), 3.0, epsilon = 1e-12);
        let a = EdgeSeller::new("a", 0.1, 0.0, 20.0).unwrap();
        let b = EdgeSeller::new("b", 0.2, 0.0, 20.0).unwrap();
        assert_abs_diff_eq!(b.cost, 2.0 * a.cost, epsilon = 1e-12);
    }

    #[test]
    fn params_validation() {
        assert!(QoeParams::default().validate().is_ok());
        let bad = QoeParams {
            w_vmaf: 0.7,
            ..QoeParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = QoeParams {
            beta: 0.0,
            ..QoeParams::default()
        };
        assert!(bad.validate().is_err());
        assert!(VrUser::new("u", -1.0, 5.0, &QoeParams::default()).is_err());
        assert!(EdgeSeller::new("s", -0.1, 1.0, 5.0).is_err());
    }
}
