//! Serializes a complex number as `{"re": …, "im": …}`.

use serde::ser::SerializeStruct;
use serde::Serializer;

use crate::Complex;

pub fn serialize<S: Serializer>(z: &Complex, s: S) -> Result<S::Ok, S::Error> {
    let mut st = s.serialize_struct("Complex", 2)?;
    st.serialize_field("re", &z.re)?;
    st.serialize_field("im", &z.im)?;
    st.end()
}

/// Newtype for serializing a bare complex value.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Json(#[serde(with = "self")] pub Complex);
