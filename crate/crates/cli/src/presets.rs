//! Built-in parameter sets: `β(x) = αxe^{-x}`, `g(x) = pe^{-x}`, `μ = 1`,
//! `x_m = 0`, written in the same format as user configuration files.

const ALPHA6_P5: &str = r#"
[model]
mu = 1.0
x_m = 0.0
[model.beta]
kind = "nicholson"
alpha = 6.0
[model.g]
kind = "exp_decay"
p = 5.0
"#;

const ALPHA6_P1: &str = r#"
[model]
mu = 1.0
x_m = 0.0
[model.beta]
kind = "nicholson"
alpha = 6.0
[model.g]
kind = "exp_decay"
p = 1.0
"#;

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    model: &'static str,
    extra: &'static str,
}

impl Preset {
    pub fn toml(&self) -> String {
        format!("{}{}", self.model, self.extra)
    }
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "bistable",
        summary: "alpha = 6, p = 5: equilibria 0 < b2 < b3, bistable",
        model: ALPHA6_P5,
        extra: "",
    },
    Preset {
        name: "map-f-p1",
        summary: "F(b) against y = b for alpha = 6, p = 1",
        model: ALPHA6_P1,
        extra: "[curve]\nwhich = \"F\"\nb_min = 0.0\nb_max = 6.0\nn = 300\n",
    },
    Preset {
        name: "map-f-p5",
        summary: "F(b) against y = b for alpha = 6, p = 5",
        model: ALPHA6_P5,
        extra: "[curve]\nwhich = \"F\"\nb_min = 0.0\nb_max = 6.0\nn = 300\n",
    },
    Preset {
        name: "reproduction-p1",
        summary: "R(b) for alpha = 6, p = 1 (decreasing)",
        model: ALPHA6_P1,
        extra: "[curve]\nwhich = \"R\"\nb_min = 0.0\nb_max = 10.0\nn = 200\n",
    },
    Preset {
        name: "reproduction-p5",
        summary: "R(b) for alpha = 6, p = 5 (unimodal)",
        model: ALPHA6_P5,
        extra: "[curve]\nwhich = \"R\"\nb_min = 0.0\nb_max = 10.0\nn = 200\n",
    },
    Preset {
        name: "constant-0.45",
        summary: "simulation from constant data 0.45, alpha = 6, p = 5",
        model: ALPHA6_P5,
        extra: "[simulate.init]\nkind = \"constant\"\nvalue = 0.45\n",
    },
    Preset {
        name: "constant-0.5",
        summary: "simulation from constant data 0.5, alpha = 6, p = 5",
        model: ALPHA6_P5,
        extra: "[simulate.init]\nkind = \"constant\"\nvalue = 0.5\n",
    },
    Preset {
        name: "periodic-slow",
        summary: "simulation from 0.475 + 0.2 sin(a), alpha = 6, p = 5",
        model: ALPHA6_P5,
        extra: "[simulate.init]\nkind = \"periodic\"\nb_star = 0.475\neps = 0.2\nomega = 1.0\n",
    },
    Preset {
        name: "periodic-fast",
        summary: "simulation from 0.475 + 0.2 sin(30 a), alpha = 6, p = 5",
        model: ALPHA6_P5,
        extra: "[simulate.init]\nkind = \"periodic\"\nb_star = 0.475\neps = 0.2\nomega = 30.0\n",
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}
