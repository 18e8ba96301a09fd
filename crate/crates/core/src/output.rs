//! Number formatting shared by the CSV and JSON writers.

/// Twelve significant digits; infinities as `inf` / `-inf`.
pub fn format_number(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.11e}")
    }
}

/// JSON value for a number that may be infinite.
pub fn json_number(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::Value::from(x)
    } else {
        serde_json::Value::from(format_number(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats() {
        assert_eq!(format_number(f64::INFINITY), "inf");
        assert_eq!(format_number(0.154914), "1.54914000000e-1");
        assert_eq!(json_number(f64::INFINITY), serde_json::json!("inf"));
        assert_eq!("1.54914000000e-1".parse::<f64>().unwrap(), 0.154914);
    }
}
