#![no_main]

use libfuzzer_sys::fuzz_target;
use nowcast::extratrees::ExtraTreesModel;

fuzz_target!(|data: &str| {
    if let Ok(model) = ExtraTreesModel::from_json(data) {
        let row = vec![0.0; model.feature_names().len()];
        let _ = model.predict_row(&row);
        let again = ExtraTreesModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(again, model);
    }
});
