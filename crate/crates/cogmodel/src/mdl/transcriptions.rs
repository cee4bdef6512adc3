//! Reference baseline models written in the description language itself.
//! Used to cross-check the interpreter against the native implementations.

pub const RW: &str = "\
params {
  alpha: [0, 1]
  beta: [0, 20]
}

state {
  V = vector(2, 0.5)
}

trial {
  choose(action, softmax(V, beta))
  V[action] += alpha * (reward - V[action])
}
";

pub const RW_PM: &str = "\
params {
  alpha_pos: [0, 1]
  alpha_neg: [0, 1]
  beta: [0, 20]
}

state {
  V = vector(2, 0.5)
}

trial {
  choose(action, softmax(V, beta))
  delta = reward - V[action]
  if delta >= 0 {
    V[action] += alpha_pos * delta
  } else {
    V[action] += alpha_neg * delta
  }
}
";

pub const RW_KAPPA: &str = "\
params {
  alpha: [0, 1]
  beta: [0, 20]
  kappa: [0, 5]
}

state {
  V = vector(2, 0.5)
  prev = -1
}

trial {
  pref = beta * V
  if prev >= 0 {
    pref[prev] += kappa
  }
  choose(action, softmax(pref))
  V[action] += alpha * (reward - V[action])
  prev = action
}
";

pub const PWADD: &str = "\
params {
  w1: [0, 1]
  w2: [0, 1]
  w3: [0, 1]
  w4: [0, 1]
  beta: [0, 20]
}

trial {
  d = w1 * (features_a[0] - features_b[0]) + w2 * (features_a[1] - features_b[1]) + w3 * (features_a[2] - features_b[2]) + w4 * (features_a[3] - features_b[3])
  pa = 1 / (1 + exp(0 - beta * d))
  choose(choice, [pa, 1 - pa])
}
";
