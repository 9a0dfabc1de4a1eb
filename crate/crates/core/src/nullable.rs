//! JSON has no NaN or infinity and serde_json writes them as `null`. These
//! read `null` back as NaN, so reports with non-applicable entries parse.

use serde::{Deserialize, Deserializer};

pub(crate) fn scalar<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

pub(crate) fn vec<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    Ok(Vec::<Option<f64>>::deserialize(d)?.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect())
}

#[cfg(test)]
mod tests {
    use serde::Deserialize;

    #[derive(Deserialize)]
    struct Probe {
        #[serde(deserialize_with = "super::scalar")]
        x: f64,
        #[serde(deserialize_with = "super::vec")]
        v: Vec<f64>,
    }

    #[test]
    fn null_reads_as_nan() {
        let p: Probe = serde_json::from_str(r#"{"x": null, "v": [1.5, null]}"#).unwrap();
        assert!(p.x.is_nan());
        assert_eq!(p.v[0], 1.5);
        assert!(p.v[1].is_nan());
        let text = serde_json::to_string(&serde_json::json!({"x": f64::NAN, "v": [f64::INFINITY]})).unwrap();
        let p: Probe = serde_json::from_str(&text).unwrap();
        assert!(p.x.is_nan() && p.v[0].is_nan());
    }
}
