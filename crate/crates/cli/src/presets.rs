//! Built-in configurations.

pub const LEGENDRE: &str = r#"# Seed 1 with unit weights reproduces the Legendre polynomials.
[space]
a = -1.0
b = 1.0
weight = "1"
quad_tol = 1e-11

[build]
seed = "1"
N = 6
x0 = 0.0
h = "1"
normalize = false

[output]
sample_points = 201
formats = ["csv", "json"]
"#;

pub const EXP_SEED: &str = r#"[space]
a = -1.0
b = 1.0
weight = "1"
quad_tol = 1e-11

[build]
seed = "exp(x)"
N = 4
x0 = 0.0
h = "1"
normalize = false

[output]
sample_points = 201
formats = ["csv", "json"]
"#;

pub const NONCONSTANT_H: &str = r#"[space]
a = -1.0
b = 1.0
weight = "1"
quad_tol = 1e-11

[build]
seed = "1 + x^2/4"
N = 4
x0 = 0.0
h = ["1 + x^2/2", "2 + sin(x)", "3/2 + cos(x)"]
normalize = false

[output]
sample_points = 201
formats = ["csv", "json"]
"#;

pub const NAMES: [&str; 3] = ["legendre", "exp-seed", "nonconstant-h"];

pub fn preset(name: &str) -> Option<&'static str> {
    match name {
        "legendre" => Some(LEGENDRE),
        "exp-seed" => Some(EXP_SEED),
        "nonconstant-h" => Some(NONCONSTANT_H),
        _ => None,
    }
}
