use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lookup table that backs off from a 5-character geographic key to its
/// 3- and 2-character prefixes, then to a global default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchicalTable<V> {
    pub key5: BTreeMap<String, V>,
    pub key3: BTreeMap<String, V>,
    pub key2: BTreeMap<String, V>,
    pub global_default: V,
}

impl<V: Clone> HierarchicalTable<V> {
    pub fn new(global_default: V) -> Self {
        Self {
            key5: BTreeMap::new(),
            key3: BTreeMap::new(),
            key2: BTreeMap::new(),
            global_default,
        }
    }

    pub fn lookup(&self, key5: &str) -> Result<&V> {
        if key5.chars().count() != 5 || !key5.is_ascii() {
            return Err(Error::Format(format!(
                "hierarchical key must be 5 ASCII characters, got {key5:?}"
            )));
        }
        Ok(self
            .key5
            .get(key5)
            .or_else(|| self.key3.get(&key5[..3]))
            .or_else(|| self.key2.get(&key5[..2]))
            .unwrap_or(&self.global_default))
    }
}

impl HierarchicalTable<f64> {
    /// Builds mean-value tables at every level from `(key5, value)` observations.
    pub fn from_observations<'a>(
        observations: impl IntoIterator<Item = (&'a str, f64)>,
    ) -> Result<Self> {
        let mut sums: [BTreeMap<String, (f64, usize)>; 3] = Default::default();
        let (mut total, mut count) = (0.0, 0usize);
        for (key, value) in observations {
            if key.chars().count() != 5 || !key.is_ascii() {
                return Err(Error::Format(format!("malformed key {key:?}")));
            }
            for (level, len) in [5, 3, 2].into_iter().enumerate() {
                let e = sums[level].entry(key[..len].to_string()).or_insert((0.0, 0));
                e.0 += value;
                e.1 += 1;
            }
            total += value;
            count += 1;
        }
        if count == 0 {
            return Err(Error::domain("no observations to aggregate"));
        }
        let means = |m: &BTreeMap<String, (f64, usize)>| {
            m.iter()
                .map(|(k, (s, n))| (k.clone(), s / *n as f64))
                .collect::<BTreeMap<_, _>>()
        };
        Ok(Self {
            key5: means(&sums[0]),
            key3: means(&sums[1]),
            key2: means(&sums[2]),
            global_default: total / count as f64,
        })
    }
}
