#![allow(dead_code)]

use lck::ObservationStructure;

pub fn c1() -> ObservationStructure {
    ObservationStructure::from_json(
        r#"{"agents":["a","b"],"observations":{"a":["oa"],"b":["ob"]},"results":["0","1"],"compose":"max"}"#,
    )
    .unwrap()
}

pub fn c2() -> ObservationStructure {
    ObservationStructure::from_json(
        r#"{"agents":["a","b"],"observations":{"a":["oa"],"b":["ob1","ob2"]},"results":["0","1"],"compose":"max"}"#,
    )
    .unwrap()
}

pub fn min3() -> ObservationStructure {
    ObservationStructure::from_json(
        r#"{"agents":["a","b"],"observations":{"a":["x1","x2"],"b":["y"]},"results":["0","1","2"],"compose":"min"}"#,
    )
    .unwrap()
}

pub fn union3() -> ObservationStructure {
    ObservationStructure::from_json(
        r#"{"agents":["a","b"],"observations":{"a":["x"],"b":["y1","y2"]},"results":["u","v","uv"],"compose":"union"}"#,
    )
    .unwrap()
}

pub fn three_agents() -> ObservationStructure {
    ObservationStructure::from_json(
        r#"{"agents":["a","b","c"],"observations":{"a":["x"],"b":["y"],"c":["z"]},"results":["0","1"],"compose":"max"}"#,
    )
    .unwrap()
}
