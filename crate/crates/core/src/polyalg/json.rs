//! JSON term-list form `{vars: [...], terms: [{exp, num, den}]}`.

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Poly, PolyError, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyJson {
    pub vars: Vec<String>,
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub exp: Vec<u32>,
    pub num: String,
    pub den: String,
}

impl Poly {
    /// Term list in descending graded-lexicographic order.
    pub fn to_term_list<S: AsRef<str>>(&self, vars: &[S]) -> PolyJson {
        PolyJson {
            vars: vars.iter().map(|s| s.as_ref().to_string()).collect(),
            terms: self
                .terms()
                .rev()
                .map(|(m, c)| TermJson {
                    exp: m.exps().to_vec(),
                    num: c.numer().to_string(),
                    den: c.denom().to_string(),
                })
                .collect(),
        }
    }

    pub fn from_term_list(list: &PolyJson) -> Result<Poly, PolyError> {
        let n = list.vars.len();
        let terms = list
            .terms
            .iter()
            .map(|t| {
                let num: BigInt = t
                    .num
                    .trim()
                    .parse()
                    .map_err(|_| PolyError::BadTermList(format!("bad numerator `{}`", t.num)))?;
                let den: BigInt = t
                    .den
                    .trim()
                    .parse()
                    .map_err(|_| PolyError::BadTermList(format!("bad denominator `{}`", t.den)))?;
                if den.is_zero() {
                    return Err(PolyError::DivisionByZero);
                }
                Ok((t.exp.clone(), Rational::new(num, den)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Poly::from_terms(n, terms)
    }

    /// Accepts either a text string or a term-list object. A term list must
    /// name exactly the expected variables.
    pub fn from_json_value<S: AsRef<str>>(value: &Value, vars: &[S]) -> Result<Poly, PolyError> {
        match value {
            Value::String(s) => Poly::parse(s, vars),
            Value::Number(n) => Poly::parse(&n.to_string(), vars),
            Value::Object(_) => {
                let list: PolyJson = serde_json::from_value(value.clone())
                    .map_err(|e| PolyError::BadTermList(e.to_string()))?;
                let expected: Vec<&str> = vars.iter().map(|s| s.as_ref()).collect();
                if list.vars.iter().map(String::as_str).ne(expected.iter().copied()) {
                    return Err(PolyError::BadTermList(format!(
                        "variables {:?} do not match expected {:?}",
                        list.vars, expected
                    )));
                }
                Poly::from_term_list(&list)
            }
            _ => Err(PolyError::BadTermList(
                "expected a string or a term-list object".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_forms_parse_to_the_same_poly() {
        let v = ["x", "y"];
        let p = Poly::parse("3/2*x^2*y - y + 5", &v).unwrap();
        let obj = serde_json::to_value(p.to_term_list(&v)).unwrap();
        assert_eq!(Poly::from_json_value(&obj, &v).unwrap(), p);
        let txt = Value::String(p.to_text(&v));
        assert_eq!(Poly::from_json_value(&txt, &v).unwrap(), p);
    }

    #[test]
    fn term_list_layout() {
        let p = Poly::parse("-x/3 + 2", &["x"]).unwrap();
        let j = serde_json::to_string(&p.to_term_list(&["x"])).unwrap();
        assert_eq!(
            j,
            r#"{"vars":["x"],"terms":[{"exp":[1],"num":"-1","den":"3"},{"exp":[0],"num":"2","den":"1"}]}"#
        );
    }

    #[test]
    fn rejects_bad_lists() {
        let bad = serde_json::json!({"vars": ["x"], "terms": [{"exp": [1, 2], "num": "1", "den": "1"}]});
        assert!(Poly::from_json_value(&bad, &["x"]).is_err());
        let zero_den = serde_json::json!({"vars": ["x"], "terms": [{"exp": [1], "num": "1", "den": "0"}]});
        assert_eq!(
            Poly::from_json_value(&zero_den, &["x"]).unwrap_err(),
            PolyError::DivisionByZero
        );
        let wrong_vars = serde_json::json!({"vars": ["u"], "terms": []});
        assert!(Poly::from_json_value(&wrong_vars, &["x"]).is_err());
        assert!(Poly::from_json_value(&Value::Bool(true), &["x"]).is_err());
    }
}
