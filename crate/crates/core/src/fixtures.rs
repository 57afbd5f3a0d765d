//! Feature models bundled with the crate, used by tests and benchmarks.

pub const AIRCRAFT: &str = include_str!("../fixtures/aircraft.fm");
pub const PHONE: &str = include_str!("../fixtures/phone.fm");
pub const COFFEE: &str = include_str!("../fixtures/coffee.fm");
pub const SMART_HOME: &str = include_str!("../fixtures/smarthome.fm");
pub const WEB_SHOP: &str = include_str!("../fixtures/webshop.fm");
pub const CAR: &str = include_str!("../fixtures/car.fm");
pub const SENSOR_NODE: &str = include_str!("../fixtures/sensornode.fm");
pub const GPL: &str = include_str!("../fixtures/gpl.fm");

/// Every bundled fixture as `(name, source)`.
pub const ALL: [(&str, &str); 8] = [
    ("aircraft", AIRCRAFT),
    ("phone", PHONE),
    ("coffee", COFFEE),
    ("smarthome", SMART_HOME),
    ("webshop", WEB_SHOP),
    ("car", CAR),
    ("sensornode", SENSOR_NODE),
    ("gpl", GPL),
];
