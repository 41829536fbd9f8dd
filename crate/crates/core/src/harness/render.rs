use crate::ir::Value;

/// Runtime values of the interpreter.
#[derive(Debug, Clone, PartialEq)]
pub enum RtValue {
    Null,
    Int(i32),
    Long(i64),
    Double(f64),
    Bool(bool),
    Str(String),
    Object { class: String, id: u64 },
    Array { elem_type: String, items: Vec<RtValue> },
}

impl RtValue {
    pub fn from_const(v: &Value) -> RtValue {
        match v {
            Value::Int(n) => RtValue::Int(*n),
            Value::Long(n) => RtValue::Long(*n),
            Value::Double(d) => RtValue::Double(*d),
            Value::Bool(b) => RtValue::Bool(*b),
            Value::Str(s) => RtValue::Str(s.clone()),
            Value::Null => RtValue::Null,
            Value::Array { elem_type, items } => {
                RtValue::Array { elem_type: elem_type.clone(), items: items.iter().map(RtValue::from_const).collect() }
            }
        }
    }

    /// Runtime class, `None` for null and primitives.
    pub fn class(&self) -> Option<String> {
        match self {
            RtValue::Str(_) => Some("java.lang.String".into()),
            RtValue::Object { class, .. } => Some(class.clone()),
            RtValue::Array { elem_type, .. } => Some(format!("{elem_type}[]")),
            _ => None,
        }
    }

    pub fn truthy(&self) -> bool {
        match self {
            RtValue::Bool(b) => *b,
            RtValue::Int(n) => *n != 0,
            RtValue::Long(n) => *n != 0,
            RtValue::Double(d) => *d != 0.0,
            RtValue::Null => false,
            _ => true,
        }
    }
}

/// Version-independent rendering used to compare return values: object
/// identities are elided so fresh objects of one class render alike.
pub fn canonical_render(v: &RtValue) -> String {
    match v {
        RtValue::Null => "null".into(),
        RtValue::Int(n) => n.to_string(),
        RtValue::Long(n) => n.to_string(),
        RtValue::Double(d) => format_g17(*d),
        RtValue::Bool(b) => b.to_string(),
        RtValue::Str(s) => format!("\"{s}\""),
        RtValue::Object { class, .. } => format!("{class}@fresh-id-elided"),
        RtValue::Array { items, .. } => {
            let items: Vec<String> = items.iter().map(canonical_render).collect();
            format!("[{}]", items.join(", "))
        }
    }
}

/// C's `%.17g`.
pub fn format_g17(d: f64) -> String {
    const P: i32 = 17;
    if d.is_nan() {
        return "nan".into();
    }
    if d.is_infinite() {
        return if d > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, d);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let x: i32 = exp.parse().expect("numeric exponent");
    if (-4..P).contains(&x) {
        let fixed = format!("{:.*}", (P - 1 - x) as usize, d);
        trim_fraction(&fixed).to_string()
    } else {
        let sign = if x < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), x.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
