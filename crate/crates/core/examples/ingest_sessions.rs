// Parse a charge-point export whose column names differ from the defaults,
// then drop sessions that stayed plugged in for more than a week.
//
//     cargo run --example ingest_sessions

use plugin_forecast::ingest::{filter_overlong, parse_events, ColumnMapping, DEFAULT_MAX_DURATION_MINUTES};

const EXPORT: &str = "\
Event ID,Site,Plug,Start Date,Start Time,End Date,End Time,Energy (kWh),Owner
E1,CP-001,1,03/04/2017,08:15,03/04/2017,17:40,21.5,City Council
E2,CP-001,2,03/04/2017,09:02:37,03/04/2017,09:55,4.1,City Council
E3,CP-014,,04/04/2017,12:00,04/04/2017,13:30,7.9,Hospital Trust
E4,CP-022,1,05/04/2017,07:45,19/04/2017,08:00,0.0,University
E5,CP-022,1,06/04/2017,10:00,06/04/2017,09:00,3.0,University
";

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mapping = ColumnMapping {
        event_id: "Event ID".into(),
        charge_point_id: Some("Site".into()),
        connector: "Plug".into(),
        start_date: "Start Date".into(),
        start_time: "Start Time".into(),
        end_date: "End Date".into(),
        end_time: "End Time".into(),
        energy: "Energy (kWh)".into(),
        organization: "Owner".into(),
        date_format: "%d/%m/%Y".into(),
    };

    let (events, mut report) = parse_events(EXPORT.as_bytes(), &mapping)?;
    let (events, removed) = filter_overlong(events, DEFAULT_MAX_DURATION_MINUTES);
    report.record_overlong(removed);

    for e in &events {
        println!(
            "{:<3} {:<7} connector {}  {} -> {}  ({} min, {:.1} kWh)",
            e.event_id,
            e.charge_point_id.as_deref().unwrap_or("-"),
            e.connector,
            e.start,
            e.end,
            e.duration_minutes(),
            e.energy_kwh
        );
    }
    println!(
        "accepted {}, over one week {}, malformed {}, connector defaulted {}",
        report.accepted, report.rejected_overlong, report.malformed, report.connector_defaulted
    );
    assert_eq!(events.len(), 3);
    Ok(())
}
