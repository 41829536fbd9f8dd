use rand::distributions::Alphanumeric;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::trace::DummyRule;
use super::SliceError;
use crate::ir::{IrProgram, MethodSignature, Value};

const MAX_CTOR_NESTING: usize = 8;
const ARRAY_LEN: usize = 3;
const STRING_LEN: usize = 8;

/// A synthesized placeholder value.
#[derive(Debug, Clone, PartialEq)]
pub enum DummyValue {
    Literal { rule: DummyRule, value: Value },
    /// `new class` followed by `specialinvoke <init>(args)`.
    Construct { class: String, ctor: MethodSignature, args: Vec<DummyValue> },
    /// A framework object the test environment hands out, built by `new class`.
    Environment { class: String },
}

impl DummyValue {
    pub fn rule(&self) -> DummyRule {
        match self {
            DummyValue::Literal { rule, .. } => *rule,
            DummyValue::Construct { .. } => DummyRule::Object,
            DummyValue::Environment { .. } => DummyRule::Environment,
        }
    }
}

/// Derives a per-slot seed from the global seed and a scope string (usually
/// an API signature), so dummies stay stable when unrelated sites change.
pub fn dummy_seed(global: u64, scope: &str, slot: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(global.to_le_bytes());
    h.update(scope.as_bytes());
    h.update([0u8]);
    h.update(slot.as_bytes());
    let d = h.finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&d[..8]);
    u64::from_le_bytes(b)
}

fn primitive_rule(ty: &str) -> Option<DummyRule> {
    Some(match ty {
        "int" | "java.lang.Integer" => DummyRule::Int,
        "long" | "java.lang.Long" => DummyRule::Long,
        "double" | "java.lang.Double" => DummyRule::Double,
        "boolean" | "java.lang.Boolean" => DummyRule::Boolean,
        "java.lang.String" | "java.lang.CharSequence" => DummyRule::String,
        _ => return None,
    })
}

fn primitive_value(rule: DummyRule, rng: &mut ChaCha8Rng) -> Value {
    match rule {
        DummyRule::Int => Value::Int(rng.gen()),
        DummyRule::Long => Value::Long(rng.gen()),
        DummyRule::Double => Value::Double(rng.gen_range(-1.0e6..1.0e6)),
        DummyRule::Boolean => Value::Bool(rng.gen()),
        DummyRule::String => {
            Value::Str(rng.sample_iter(&Alphanumeric).take(STRING_LEN).map(char::from).collect())
        }
        _ => unreachable!("not a primitive rule"),
    }
}

/// Placeholder of type `ty`, deterministic in `seed`. Objects are built with
/// their constructor of fewest parameters (ties broken by signature text);
/// framework classes without constructors come from the environment.
pub fn synthesize_dummy_value(p: &IrProgram, ty: &str, seed: u64) -> Result<DummyValue, SliceError> {
    synthesize(p, ty, seed, 0)
}

fn synthesize(p: &IrProgram, ty: &str, seed: u64, nesting: usize) -> Result<DummyValue, SliceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if let Some(rule) = primitive_rule(ty) {
        return Ok(DummyValue::Literal { rule, value: primitive_value(rule, &mut rng) });
    }
    if let Some(elem) = ty.strip_suffix("[]") {
        return match primitive_rule(elem) {
            Some(rule) if rule != DummyRule::String => {
                let items = (0..ARRAY_LEN).map(|_| primitive_value(rule, &mut rng)).collect();
                Ok(DummyValue::Literal {
                    rule: DummyRule::PrimitiveArray,
                    value: Value::Array { elem_type: elem.to_string(), items },
                })
            }
            _ => Err(SliceError::Unconstructible(ty.to_string())),
        };
    }
    if nesting >= MAX_CTOR_NESTING {
        return Err(SliceError::Unconstructible(ty.to_string()));
    }
    let class = if p.is_app_class(ty) {
        p.framework_ancestor(ty).ok_or_else(|| SliceError::Unconstructible(ty.to_string()))?
    } else {
        ty.to_string()
    };
    let mut ctors: Vec<&MethodSignature> =
        p.framework.methods.iter().filter(|m| m.declaring_class == class && m.is_constructor()).collect();
    ctors.sort_by_key(|m| (m.arity(), m.to_string()));
    for ctor in ctors {
        let args: Result<Vec<_>, _> = ctor
            .param_types
            .iter()
            .enumerate()
            .map(|(i, t)| synthesize(p, t, dummy_seed(seed, &ctor.to_string(), &i.to_string()), nesting + 1))
            .collect();
        if let Ok(args) = args {
            return Ok(DummyValue::Construct { class, ctor: ctor.clone(), args });
        }
    }
    if p.is_framework_class(&class) {
        return Ok(DummyValue::Environment { class });
    }
    Err(SliceError::Unconstructible(ty.to_string()))
}
