//! Shared scenario fixtures for the CLI integration tests.
#![allow(dead_code)]

/// Sign-changing damping on the unstable wave side: L = -Delta - 2 on
/// (0, pi) has lambda_1 = -1, the zero steady state of the quadratic
/// nonlinearity is linearly unstable, and b = 0.5 cos(2t) (1+t)^-2 changes
/// sign while every declared norm stays derivable.
pub const WAVE_TEMPLATE: &str = r#"
[grid]
kind = "interval"
x_lo = 0.0
x_hi = 3.141592653589793
node_count = 401

[operator]
potential = { kind = "constant", value = -2.0 }

[steady]
kind = "zero"

[nonlinearity]
kind = "quadratic"

[coefficients]
a = { kind = "constant", value = 1.0 }
b = { kind = "cos_modulated", b0 = 0.5, alpha = 2.0, omega = 2.0 }

[equation]
kind = "hyperbolic"
t_max = 20.0

[perturbation]
epsilon = 0.001
delta_factor = 1.05

[certify]
clauses = ["T1a", "T1b", "T1c", "T1d", "T1blow"]

[output]
directory = "@OUT@"
cadence = 0.01
"#;

/// Positive bounded damping on the parabolic side; same unstable operator.
pub const HEAT_TEMPLATE: &str = r#"
[grid]
kind = "interval"
x_lo = 0.0
x_hi = 3.141592653589793
node_count = 201

[operator]
potential = { kind = "constant", value = -2.0 }

[steady]
kind = "zero"

[nonlinearity]
kind = "quadratic"

[coefficients]
a = { kind = "constant", value = 1.0 }
b = { kind = "shifted_sine", b0 = 1.0, amp = 0.5 }

[equation]
kind = "parabolic"
t_max = 20.0

[perturbation]
epsilon = 0.001

[certify]
clauses = ["T2a", "T2b", "T2c"]

[output]
directory = "@OUT@"
cadence = 0.01
"#;

/// The heat scenario with the damping constant at -1 while still declared
/// positive: parses cleanly, fails the run-time parabolicity audit.
pub const FLIPPED_TEMPLATE: &str = r#"
[grid]
kind = "interval"
x_lo = 0.0
x_hi = 3.141592653589793
node_count = 201

[operator]
potential = { kind = "constant", value = -2.0 }

[steady]
kind = "zero"

[nonlinearity]
kind = "quadratic"

[coefficients]
a = { kind = "constant", value = 1.0 }
b = { kind = "constant", value = -1.0 }
b_positive = true

[equation]
kind = "parabolic"
t_max = 20.0

[perturbation]
epsilon = 0.001

[certify]
clauses = ["T2a", "T2b", "T2c"]

[output]
directory = "@OUT@"
cadence = 0.01
"#;

/// Growing inertia with no declared supremum: clause T1c (which needs
/// sup a) must be rejected at parse time.
pub const MISSING_A1_TEMPLATE: &str = r#"
[grid]
kind = "interval"
x_lo = 0.0
x_hi = 3.141592653589793
node_count = 201

[operator]
potential = { kind = "constant", value = -2.0 }

[steady]
kind = "zero"

[nonlinearity]
kind = "quadratic"

[coefficients]
a = { kind = "power_growth", a1 = 1.0, r = 0.5 }
b = { kind = "cos_modulated", b0 = 0.5, alpha = 2.0, omega = 2.0 }

[equation]
kind = "hyperbolic"
t_max = 20.0

[perturbation]
epsilon = 0.001
delta_factor = 1.05

[certify]
clauses = ["T1c"]

[output]
directory = "@OUT@"
cadence = 0.01
"#;

/// Base document for the damping-decay sweep; the [sweep] table replaces
/// coefficients.b.alpha per run.
pub const SWEEP_TEMPLATE: &str = r#"
[grid]
kind = "interval"
x_lo = 0.0
x_hi = 3.141592653589793
node_count = 201

[operator]
potential = { kind = "constant", value = -2.0 }

[steady]
kind = "zero"

[nonlinearity]
kind = "quadratic"

[coefficients]
a = { kind = "constant", value = 1.0 }
b = { kind = "power_decay", b0 = 0.5, alpha = 0.5 }

[equation]
kind = "hyperbolic"
t_max = 20.0

[perturbation]
epsilon = 0.001
delta_factor = 1.05

[certify]
clauses = ["T1a", "T1b", "T1c"]

[output]
directory = "@OUT@"
cadence = 0.01

[sweep]
path = "coefficients.b.alpha"
values = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
"#;

pub fn with_out(template: &str, out: &std::path::Path) -> String {
    template.replace("@OUT@", &out.display().to_string())
}
