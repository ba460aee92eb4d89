//! Seeds as TOML-safe values: integers up to `i64::MAX`, decimal strings
//! above it. Both forms are accepted on input.

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
    Wide(*v).serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
    Wide::deserialize(d).map(|w| w.0)
}

/// The same encoding for a list of seeds.
pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[u64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|&x| Wide(x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u64>, D::Error> {
        Vec::<Wide>::deserialize(d).map(|v| v.into_iter().map(|w| w.0).collect())
    }
}

struct Wide(u64);

impl Serialize for Wide {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(self.0) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&self.0.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Wide {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Wide;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("an unsigned 64-bit seed, as an integer or a decimal string")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Wide, E> {
                Ok(Wide(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Wide, E> {
                u64::try_from(v).map(Wide).map_err(|_| E::custom(format!("seed {v} is negative")))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Wide, E> {
                v.parse().map(Wide).map_err(|_| E::custom(format!("`{v}` is not an unsigned 64-bit seed")))
            }
        }
        d.deserialize_any(V)
    }
}

#[cfg(test)]
mod tests {
    use serde::{Deserialize, Serialize};

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct S {
        #[serde(with = "super")]
        seed: u64,
        #[serde(with = "super::vec")]
        seeds: Vec<u64>,
    }

    #[test]
    fn full_range_round_trips_through_toml() {
        let s = S { seed: u64::MAX, seeds: vec![0, i64::MAX as u64, i64::MAX as u64 + 1] };
        let text = toml::to_string(&s).unwrap();
        assert_eq!(toml::from_str::<S>(&text).unwrap(), s);
        assert_eq!(toml::from_str::<S>("seed = 3\nseeds = [1, \"2\"]").unwrap(), S { seed: 3, seeds: vec![1, 2] });
        assert!(toml::from_str::<S>("seed = -1\nseeds = []").is_err());
    }
}
