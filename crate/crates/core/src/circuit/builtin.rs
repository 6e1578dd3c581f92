//! Shipped base topologies.
//!
//! `c17` is the ISCAS'85 C17 benchmark with its three fan-out points made
//! explicit as FAN gates. `c26` extends it with a sixth input, fan-outs on
//! `N6`, `N8` and `N19`, and two extra NAND gates, giving 26 wires, 6 inputs,
//! 4 outputs, 8 two-input gates and 6 FAN gates. C26 is defined only by
//! those counts, so this wiring is one concrete choice.

use super::{parse_netlist, Circuit};
use crate::error::{Error, Result};

pub const C17_NETLIST: &str = "\
# ISCAS'85 C17 with explicit fan-out
INPUT N1
INPUT N2
INPUT N3
INPUT N6
INPUT N7
OUTPUT N22
OUTPUT N23
GATE F3 FAN N3 -> N3a N3b
GATE G10 NAND N1 N3a -> N10
GATE G11 NAND N3b N6 -> N11
GATE F11 FAN N11 -> N11a N11b
GATE G16 NAND N2 N11a -> N16
GATE G19 NAND N11b N7 -> N19
GATE F16 FAN N16 -> N16a N16b
GATE G22 NAND N10 N16a -> N22
GATE G23 NAND N16b N19 -> N23
";

pub const C26_NETLIST: &str = "\
# C17 extended to 6 inputs and 4 outputs
INPUT N1
INPUT N2
INPUT N3
INPUT N6
INPUT N7
INPUT N8
OUTPUT N22
OUTPUT N23
OUTPUT N24
OUTPUT N25
GATE F3 FAN N3 -> N3a N3b
GATE F6 FAN N6 -> N6a N6b
GATE G10 NAND N1 N3a -> N10
GATE G11 NAND N3b N6a -> N11
GATE F11 FAN N11 -> N11a N11b
GATE G16 NAND N2 N11a -> N16
GATE G19 NAND N11b N7 -> N19
GATE F16 FAN N16 -> N16a N16b
GATE F19 FAN N19 -> N19a N19b
GATE F8 FAN N8 -> N8a N8b
GATE G22 NAND N10 N16a -> N22
GATE G23 NAND N16b N19a -> N23
GATE G24 NAND N19b N8a -> N24
GATE G25 NAND N8b N6b -> N25
";

pub fn builtin_topology(name: &str) -> Result<Circuit> {
    match name.to_ascii_lowercase().as_str() {
        "c17" => parse_netlist(C17_NETLIST),
        "c26" => parse_netlist(C26_NETLIST),
        _ => Err(Error::UnknownTopology(name.to_string())),
    }
}
