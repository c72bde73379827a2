//! Semantic types for the supported C subset.
//!
//! The target model is LP64: `char` is a signed 8-bit integer, `long` and
//! `long long` are both 64 bits wide.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A fixed-width integer type. Width and signedness fully determine the range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IntType {
    pub signed: bool,
    pub bits: u8,
}

impl IntType {
    pub const I8: IntType = IntType { signed: true, bits: 8 };
    pub const I16: IntType = IntType { signed: true, bits: 16 };
    pub const I32: IntType = IntType { signed: true, bits: 32 };
    pub const I64: IntType = IntType { signed: true, bits: 64 };
    pub const U8: IntType = IntType { signed: false, bits: 8 };
    pub const U16: IntType = IntType { signed: false, bits: 16 };
    pub const U32: IntType = IntType { signed: false, bits: 32 };
    pub const U64: IntType = IntType { signed: false, bits: 64 };

    pub const ALL: [IntType; 8] = [
        Self::I8,
        Self::U8,
        Self::I16,
        Self::U16,
        Self::I32,
        Self::U32,
        Self::I64,
        Self::U64,
    ];

    pub fn min(self) -> i128 {
        if self.signed {
            -(1i128 << (self.bits - 1))
        } else {
            0
        }
    }

    pub fn max(self) -> i128 {
        if self.signed {
            (1i128 << (self.bits - 1)) - 1
        } else {
            (1i128 << self.bits) - 1
        }
    }

    pub fn contains(self, v: i128) -> bool {
        v >= self.min() && v <= self.max()
    }

    /// Reduce `v` modulo 2^bits into this type's range (two's complement).
    pub fn wrap(self, v: i128) -> i128 {
        let modulus = 1i128 << self.bits;
        let mut r = v.rem_euclid(modulus);
        if self.signed && r > self.max() {
            r -= modulus;
        }
        r
    }

    /// Integer promotion: everything narrower than `int` becomes `int`.
    pub fn promote(self) -> IntType {
        if self.bits < 32 {
            IntType::I32
        } else {
            self
        }
    }

    /// The usual arithmetic conversions applied to two integer operands.
    pub fn usual_conversion(a: IntType, b: IntType) -> IntType {
        let (a, b) = (a.promote(), b.promote());
        if a == b {
            return a;
        }
        if a.signed == b.signed {
            return if a.bits >= b.bits { a } else { b };
        }
        let (u, s) = if a.signed { (b, a) } else { (a, b) };
        if u.bits >= s.bits {
            u
        } else {
            s
        }
    }

    /// The `<stdint.h>` spelling of this type.
    pub fn c_name(self) -> &'static str {
        match (self.signed, self.bits) {
            (true, 8) => "int8_t",
            (true, 16) => "int16_t",
            (true, 32) => "int32_t",
            (true, 64) => "int64_t",
            (false, 8) => "uint8_t",
            (false, 16) => "uint16_t",
            (false, 32) => "uint32_t",
            (false, 64) => "uint64_t",
            _ => unreachable!("unsupported integer width {}", self.bits),
        }
    }

    /// A C literal whose type is exactly `self.promote()` and whose value is `v`.
    ///
    /// Panics if `v` is outside the promoted range.
    pub fn literal(self, v: i128) -> String {
        let t = self.promote();
        assert!(t.contains(v), "{v} does not fit {t}");
        let suffix = match (t.signed, t.bits) {
            (true, 32) => "",
            (false, 32) => "u",
            (true, 64) => "ll",
            (false, 64) => "ull",
            _ => unreachable!(),
        };
        if v >= 0 {
            format!("{v}{suffix}")
        } else if v == t.min() {
            format!("(-{}{suffix} - 1)", -(v + 1))
        } else {
            format!("(-{}{suffix})", -v)
        }
    }
}

impl fmt::Display for IntType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", if self.signed { "i" } else { "u" }, self.bits)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TypeDesc {
    Int {
        #[serde(flatten)]
        int: IntType,
    },
    Float32,
    Float64,
    Void,
    Pointer {
        elem: Box<TypeDesc>,
    },
    Array {
        elem: Box<TypeDesc>,
        len: u64,
    },
    /// Record types are referenced by tag; anonymous records receive a synthetic tag.
    Record {
        tag: String,
    },
}

impl TypeDesc {
    pub fn int(int: IntType) -> TypeDesc {
        TypeDesc::Int { int }
    }

    pub fn pointer(elem: TypeDesc) -> TypeDesc {
        TypeDesc::Pointer { elem: Box::new(elem) }
    }

    pub fn as_int(&self) -> Option<IntType> {
        match self {
            TypeDesc::Int { int } => Some(*int),
            _ => None,
        }
    }

    pub fn is_float(&self) -> bool {
        matches!(self, TypeDesc::Float32 | TypeDesc::Float64)
    }

    pub fn is_arith(&self) -> bool {
        self.as_int().is_some() || self.is_float()
    }

    pub fn is_scalar(&self) -> bool {
        self.is_arith() || matches!(self, TypeDesc::Pointer { .. })
    }

    /// Numeric, or a pointer to numeric: the shapes admitted at function boundaries.
    pub fn is_numeric_or_numeric_pointer(&self) -> bool {
        match self {
            TypeDesc::Pointer { elem } => elem.is_arith(),
            t => t.is_arith(),
        }
    }

    /// The pointee of a pointer or the element of an array.
    pub fn element(&self) -> Option<&TypeDesc> {
        match self {
            TypeDesc::Pointer { elem } | TypeDesc::Array { elem, .. } => Some(elem),
            _ => None,
        }
    }

    /// Array-to-pointer decay.
    pub fn decay(&self) -> TypeDesc {
        match self {
            TypeDesc::Array { elem, .. } => TypeDesc::Pointer { elem: elem.clone() },
            t => t.clone(),
        }
    }

    pub fn involves_float(&self) -> bool {
        match self {
            TypeDesc::Float32 | TypeDesc::Float64 => true,
            TypeDesc::Pointer { elem } | TypeDesc::Array { elem, .. } => elem.involves_float(),
            _ => false,
        }
    }
}

impl fmt::Display for TypeDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeDesc::Int { int } => write!(f, "{int}"),
            TypeDesc::Float32 => f.write_str("f32"),
            TypeDesc::Float64 => f.write_str("f64"),
            TypeDesc::Void => f.write_str("void"),
            TypeDesc::Pointer { elem } => write!(f, "{elem}*"),
            TypeDesc::Array { elem, len } => write!(f, "{elem}[{len}]"),
            TypeDesc::Record { tag } => write!(f, "struct {tag}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ranges() {
        assert_eq!(IntType::I8.min(), -128);
        assert_eq!(IntType::I8.max(), 127);
        assert_eq!(IntType::U64.max(), u64::MAX as i128);
        assert_eq!(IntType::I64.min(), i64::MIN as i128);
    }

    #[test]
    fn conversions() {
        use IntType as T;
        assert_eq!(T::usual_conversion(T::U8, T::I16), T::I32);
        assert_eq!(T::usual_conversion(T::U32, T::I32), T::U32);
        assert_eq!(T::usual_conversion(T::U32, T::I64), T::I64);
        assert_eq!(T::usual_conversion(T::U64, T::I64), T::U64);
        assert_eq!(T::usual_conversion(T::I32, T::I64), T::I64);
    }

    #[test]
    fn literals() {
        assert_eq!(IntType::I32.literal(5), "5");
        assert_eq!(IntType::U8.literal(200), "200");
        assert_eq!(IntType::U32.literal(7), "7u");
        assert_eq!(IntType::I64.literal(-3), "(-3ll)");
        assert_eq!(IntType::I32.literal(i32::MIN as i128), "(-2147483647 - 1)");
        assert_eq!(IntType::U64.literal(u64::MAX as i128), "18446744073709551615ull");
    }

    proptest! {
        #[test]
        fn wrap_matches_native(v in any::<i64>()) {
            prop_assert_eq!(IntType::I8.wrap(v as i128), (v as i8) as i128);
            prop_assert_eq!(IntType::U16.wrap(v as i128), (v as u16) as i128);
            prop_assert_eq!(IntType::I32.wrap(v as i128), (v as i32) as i128);
            prop_assert_eq!(IntType::U64.wrap(v as i128), (v as u64) as i128);
        }
    }
}
