"""Formula sets used by the acceptance checks and the CLI ``--corpus`` flag."""

# Pure past LTL (no counting, no MOD): compiled with diagonal gates.
PLTL = [
    "a S b",
    "P (a & Y a)",
    "Y Y a",
    "H (a -> !Y b)",
    "(a S b) S c",
    "a S (b S c)",
    "(a S Y b) S Y Y c",
    "P a",
    "H a",
    "Y a",
    "!Y true",
    "a & Y b",
    "P (b & Y P a)",
    "H (b -> Y a)",
    "(a | b) S c",
    "!(a S b) & P c",
    "Y (a S b)",
    "P (a & !Y true)",
    "H (c -> (a S b))",
    "true S (a & Y Y b)",
    "H (a -> P b) & P b",
    "c",
    "false | Y c",
    "(a S b) & (b S c)",
]

# Unary fragment with MOD atoms (no since): constant gates.
UN_MOD = [
    "H a & MOD[0,2]",
    "MOD[1,3]",
    "P a & MOD[0,2]",
    "Y a | MOD[2,3]",
    "H (MOD[0,2] -> a)",
    "H (a -> MOD[1,2])",
    "MOD[1,2] & P b | MOD[0,3]",
    "Y Y MOD[0,2]",
    "P (b & MOD[0,5])",
    "H (MOD[0,7] -> b) & P a",
    "Y (a & MOD[1,2])",
    "!MOD[0,2] & H (c -> Y a)",
]

# Since mixed with MOD atoms: mixed layers.
MIXED = [
    "H a & MOD[0,2]",
    "a S (b & MOD[0,2])",
    "(a | MOD[1,2]) S b",
    "(a S b) & MOD[1,3]",
    "P ((a S b) & MOD[0,2])",
    "MOD[0,2] S c",
    "Y (a S b) | MOD[2,3]",
    "H ((b S a) -> MOD[1,2])",
    "(a S b) S MOD[0,3]",
    "c S (a & MOD[0,2] & Y b)",
    "H (MOD[0,2] -> a) & (b S a)",
]

# Counting formulas.  Positive-coefficient ones are sound in fixed precision.
COUNTING = [
    "#[a] >= 2",
    "#[a] < 3 & P b",
    "2*#[a] + #[b] > 4",
    "#[a & Y b] <= 1",
    "P (#[b] = 2)",
    "#[a] - #[b] = 0",
    "#[a] - 2*#[b] >= 0",
    "H (#[a] - #[b] >= 0)",
]

# MOD formulas with several distinct moduli, for the lcm rewrite.
MULTI_MOD = [
    "MOD[1,2] & MOD[1,3]",
    "MOD[1,2] & P b | MOD[0,3]",
    "Y MOD[0,2] | MOD[2,5]",
    "(a S MOD[1,3]) & MOD[0,4]",
    "H (MOD[0,2] -> a) & P (MOD[1,3] & b)",
    "#[MOD[0,2]] - #[MOD[0,3]] >= 1",
]

ANBNCN = ("H ((a -> !P (b | c)) & (b -> !P c)) "
          "& (#[a] - #[b] = 0) & (#[c] - #[b] = 0)")
ANBN = "H (a -> !Y b) & (#[a] - #[b] = 0)"

CORPORA = {
    "pltl": PLTL,
    "unmod": UN_MOD,
    "mixed": MIXED,
    "counting": COUNTING,
    "multimod": MULTI_MOD,
}
