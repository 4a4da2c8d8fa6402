//! Complex numbers as `{"re": .., "im": ..}` in JSON.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
struct Cx {
    re: f64,
    im: f64,
}

pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    Cx { re: z.re, im: z.im }.serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
    let c = Cx::deserialize(d)?;
    Ok(Complex64::new(c.re, c.im))
}

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|z| Cx { re: z.re, im: z.im }))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let v = Vec::<Cx>::deserialize(d)?;
        Ok(v.into_iter().map(|c| Complex64::new(c.re, c.im)).collect())
    }
}
