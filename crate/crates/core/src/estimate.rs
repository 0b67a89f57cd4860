use crate::calib::{CalibRecord, Unit};

/// A model output together with the measurement it can be checked against, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub unit: Unit,
    pub calibrated: Option<f64>,
    pub provenance: Option<String>,
}

impl Estimate {
    pub fn modeled(value: f64, unit: Unit) -> Self {
        Estimate { value, unit, calibrated: None, provenance: None }
    }

    /// Echo of a stored measurement.
    pub fn echo(record: &CalibRecord) -> Self {
        Estimate {
            value: record.value,
            unit: record.unit,
            calibrated: Some(record.value),
            provenance: Some(record.provenance.clone()),
        }
    }

    pub fn against(mut self, record: Option<&CalibRecord>) -> Self {
        if let Some(r) = record {
            self.calibrated = Some(r.value);
            self.provenance = Some(r.provenance.clone());
        }
        self
    }

    pub fn rel_error(&self) -> Option<f64> {
        self.calibrated.map(|c| rel_error(self.value, c))
    }
}

/// `|predicted - calibrated| / |calibrated|`.
pub fn rel_error(predicted: f64, calibrated: f64) -> f64 {
    (predicted - calibrated).abs() / calibrated.abs()
}
