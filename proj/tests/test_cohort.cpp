#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "vancorisk/cohort.hpp"

using namespace vancorisk;
using testutil::random_timeline;

namespace {

PatientTimeline basic_timeline(double vanco_time) {
    PatientTimeline t;
    t.patient_id = "p1";
    t.stay_index = 1;
    t.age = 50;
    t.admission.age = 50;
    t.first_vanco_time = vanco_time;
    t.events.push_back(
        {vanco_time, EventKind::drug_dose, schema::kVancomycinId, 1.0});
    return t;
}

void add_creatinine(PatientTimeline& t, double ts, double value) {
    t.events.push_back({ts, EventKind::lab, schema::kCreatinineId, value});
    std::stable_sort(t.events.begin(), t.events.end(),
                     [](const ClinicalEvent& a, const ClinicalEvent& b) {
                         return a.timestamp < b.timestamp;
                     });
}

}  // namespace

TEST_CASE("inclusion filters remove each violation at its own stage") {
    std::vector<PatientTimeline> pop;

    auto ok = basic_timeline(10);
    add_creatinine(ok, 5, 1.0);
    pop.push_back(ok);

    auto no_vanco = ok;
    no_vanco.patient_id = "no_vanco";
    no_vanco.first_vanco_time.reset();
    no_vanco.events.clear();
    pop.push_back(no_vanco);

    auto young = ok;
    young.patient_id = "age17";
    young.age = 17;
    pop.push_back(young);

    auto old = ok;
    old.patient_id = "age81";
    old.age = 81;
    pop.push_back(old);

    auto cancer = ok;
    cancer.patient_id = "malignancy";
    cancer.has_active_malignancy = true;
    pop.push_back(cancer);

    auto second = ok;
    second.patient_id = "second_stay";
    second.stay_index = 2;
    pop.push_back(second);

    auto [kept, report] = cohort::apply_inclusion_filters(pop);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].patient_id == "p1");
    REQUIRE(report.stages.size() == 4);
    CHECK(report.stages[0].name == "received_vancomycin");
    CHECK(report.stages[0].input == 6);
    CHECK(report.stages[0].output == 5);
    CHECK(report.stages[1].name == "age_18_to_80");
    CHECK(report.stages[1].output == 3);
    CHECK(report.stages[2].name == "no_active_malignancy");
    CHECK(report.stages[2].output == 2);
    CHECK(report.stages[3].name == "first_icu_stay");
    CHECK(report.stages[3].output == 1);
}

TEST_CASE("age bounds are inclusive") {
    std::vector<PatientTimeline> pop;
    for (double age : {18.0, 80.0, 17.999, 80.001}) {
        auto t = basic_timeline(10);
        t.age = age;
        pop.push_back(t);
    }
    auto [kept, report] = cohort::apply_inclusion_filters(pop);
    CHECK(kept.size() == 2);
}

TEST_CASE("empty input yields empty output and zero-count report") {
    auto [kept, report] = cohort::apply_inclusion_filters({});
    CHECK(kept.empty());
    REQUIRE(report.stages.size() == 4);
    for (const auto& s : report.stages) {
        CHECK(s.input == 0);
        CHECK(s.output == 0);
    }
}

TEST_CASE("filters are idempotent") {
    Rng rng(11);
    std::vector<PatientTimeline> pop;
    for (int i = 0; i < 200; ++i) {
        auto t = random_timeline(rng);
        t.age = 10.0 + 80.0 * rng.uniform();
        t.stay_index = 1 + static_cast<int>(rng.uniform_int(3));
        t.has_active_malignancy = rng.bernoulli(0.2);
        pop.push_back(t);
    }
    auto [once, r1] = cohort::apply_inclusion_filters(pop);
    auto [twice, r2] = cohort::apply_inclusion_filters(once);
    REQUIRE(once.size() == twice.size());
    for (const auto& s : r2.stages) CHECK(s.input == s.output);
}

TEST_CASE("baseline creatinine takes latest strictly pre-dose value") {
    auto t = basic_timeline(6);
    add_creatinine(t, 1, 1.0);
    add_creatinine(t, 5, 1.2);
    CHECK(cohort::baseline_creatinine(t) == 1.2);

    auto t2 = basic_timeline(6);
    add_creatinine(t2, 10, 1.4);  // only post-dose
    CHECK_FALSE(cohort::baseline_creatinine(t2).has_value());

    auto t3 = basic_timeline(6);
    add_creatinine(t3, 6, 1.4);  // exactly at the dose: counts as post-dose
    CHECK_FALSE(cohort::baseline_creatinine(t3).has_value());

    PatientTimeline no_vanco;
    no_vanco.patient_id = "x";
    CHECK_THROWS_AS(cohort::baseline_creatinine(no_vanco), Error);
}

TEST_CASE("baseline matches exhaustive scan oracle on random timelines") {
    Rng rng(5);
    for (int i = 0; i < 500; ++i) {
        const auto t = random_timeline(rng);
        const auto got = cohort::baseline_creatinine(t);
        const auto want = testutil::oracle_baseline(t);
        REQUIRE(got.has_value() == want.has_value());
        if (got) CHECK(*got == *want);
    }
}

TEST_CASE("kdigo labeling on the worked examples") {
    SECTION("absolute criterion within 48h") {
        auto t = basic_timeline(10);
        add_creatinine(t, 5, 1.0);
        add_creatinine(t, 10 + 24, 1.35);
        const auto label = cohort::label_kdigo(t);
        CHECK(label.positive);
        CHECK(label.trigger == Trigger::absolute_48h);
        CHECK(label.trigger_time == 34.0);
        CHECK(label.baseline_creatinine == 1.0);
    }
    SECTION("relative criterion within 7 days") {
        auto t = basic_timeline(10);
        add_creatinine(t, 5, 1.0);
        add_creatinine(t, 10 + 120, 1.55);
        const auto label = cohort::label_kdigo(t);
        CHECK(label.positive);
        CHECK(label.trigger == Trigger::relative_7d);
    }
    SECTION("below both thresholds stays negative") {
        auto t = basic_timeline(10);
        add_creatinine(t, 5, 1.0);
        add_creatinine(t, 10 + 24, 1.2);
        add_creatinine(t, 10 + 120, 1.4);
        const auto label = cohort::label_kdigo(t);
        CHECK_FALSE(label.positive);
        CHECK(label.trigger == Trigger::none);
        CHECK(label.peak_post_creatinine == 1.4);
        CHECK(label.data_quality_flag == DataQuality::ok);
    }
    SECTION("no post-dose creatinine flags data quality") {
        auto t = basic_timeline(10);
        add_creatinine(t, 5, 1.0);
        const auto label = cohort::label_kdigo(t);
        CHECK_FALSE(label.positive);
        CHECK(label.data_quality_flag == DataQuality::no_post_creatinine);
    }
    SECTION("missing baseline is an error") {
        auto t = basic_timeline(10);
        add_creatinine(t, 20, 1.0);
        CHECK_THROWS_AS(cohort::label_kdigo(t), Error);
    }
}

TEST_CASE("boundary cases: windows are closed intervals") {
    auto t48 = basic_timeline(10);
    add_creatinine(t48, 5, 1.0);
    add_creatinine(t48, 58, 1.3);  // exactly 48h after the dose, rise exactly 0.3
    auto l = cohort::label_kdigo(t48);
    CHECK(l.positive);
    CHECK(l.trigger == Trigger::absolute_48h);

    auto t7d = basic_timeline(10);
    add_creatinine(t7d, 5, 1.0);
    add_creatinine(t7d, 178, 1.5);  // exactly 168h, exactly 1.5x
    l = cohort::label_kdigo(t7d);
    CHECK(l.positive);
    CHECK(l.trigger == Trigger::relative_7d);

    auto beyond = basic_timeline(10);
    add_creatinine(beyond, 5, 1.0);
    add_creatinine(beyond, 178.001, 3.0);  // just outside the window
    l = cohort::label_kdigo(beyond);
    CHECK_FALSE(l.positive);
}

TEST_CASE("tie between criteria reports absolute_48h") {
    auto t = basic_timeline(10);
    add_creatinine(t, 5, 1.0);
    add_creatinine(t, 30, 1.6);  // satisfies both at the same event
    const auto label = cohort::label_kdigo(t);
    CHECK(label.positive);
    CHECK(label.trigger == Trigger::absolute_48h);
}

TEST_CASE("labeler matches brute-force oracle on 10000 random trajectories") {
    Rng rng(99);
    int mismatches = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto t = random_timeline(rng);
        const auto label = cohort::label_kdigo(t);
        const auto oracle = testutil::oracle_kdigo(t);
        if (label.positive != oracle.positive) ++mismatches;
        if (label.positive && oracle.positive) {
            if (*label.trigger_time != oracle.trigger_time) ++mismatches;
            const bool got_abs = label.trigger == Trigger::absolute_48h;
            if (got_abs != oracle.absolute) ++mismatches;
        }
        if (!oracle.any_post &&
            label.data_quality_flag != DataQuality::no_post_creatinine)
            ++mismatches;
    }
    CHECK(mismatches == 0);
}

TEST_CASE("labeling monotonicity: adding post-dose creatinine never flips positive to negative") {
    Rng rng(123);
    for (int i = 0; i < 2000; ++i) {
        auto t = random_timeline(rng);
        const auto before = cohort::label_kdigo(t);
        ClinicalEvent extra{*t.first_vanco_time + 170.0 * rng.uniform() + 0.001,
                            EventKind::lab, schema::kCreatinineId,
                            0.3 + 2.2 * rng.uniform()};
        t.events.push_back(extra);
        std::stable_sort(t.events.begin(), t.events.end(),
                         [](const ClinicalEvent& a, const ClinicalEvent& b) {
                             return a.timestamp < b.timestamp;
                         });
        const auto after = cohort::label_kdigo(t);
        if (before.positive) CHECK(after.positive);
    }
}

TEST_CASE("snapshot takes latest pre-dose value per feature") {
    auto t = basic_timeline(5);
    t.events.push_back({2, EventKind::lab, "phosphate", 3.0});
    t.events.push_back({4, EventKind::lab, "phosphate", 4.1});
    t.events.push_back({5, EventKind::lab, "lactate", 9.0});  // at dose: excluded
    std::stable_sort(t.events.begin(), t.events.end(),
                     [](const ClinicalEvent& a, const ClinicalEvent& b) {
                         return a.timestamp < b.timestamp;
                     });
    const auto snap =
        cohort::extract_feature_snapshot(t, {"phosphate", "lactate", "age"});
    CHECK(snap.values[0] == 4.1);
    CHECK(is_missing(snap.values[1]));
    CHECK(snap.values[2] == 50.0);
}

TEST_CASE("snapshot matches brute-force scan and never leaks post-dose data") {
    Rng rng(321);
    const std::vector<std::string> ids{"phosphate", "lactate", "age", "apsiii"};
    for (int i = 0; i < 2000; ++i) {
        const auto t = random_timeline(rng);
        const auto snap = cohort::extract_feature_snapshot(t, ids);
        const auto want = testutil::oracle_snapshot(t, ids);
        for (std::size_t j = 0; j < ids.size(); ++j) {
            if (is_missing(want[j]))
                CHECK(is_missing(snap.values[j]));
            else
                CHECK(snap.values[j] == want[j]);
            if (!is_missing(snap.source_times[j]))
                CHECK(snap.source_times[j] < *t.first_vanco_time);
        }
    }
}

TEST_CASE("build_labeled_cohort drops and counts patients without baseline") {
    std::vector<PatientTimeline> pop;
    auto a = basic_timeline(10);
    add_creatinine(a, 5, 1.0);
    add_creatinine(a, 20, 1.6);
    pop.push_back(a);
    auto b = basic_timeline(10);  // no pre-dose creatinine
    b.patient_id = "p2";
    add_creatinine(b, 30, 2.0);
    pop.push_back(b);

    const auto labeled = cohort::build_labeled_cohort(pop);
    CHECK(labeled.data.n_rows() == 1);
    REQUIRE(labeled.attrition.stages.size() == 5);
    CHECK(labeled.attrition.stages[4].name == "pre_dose_creatinine_available");
    CHECK(labeled.attrition.stages[4].input == 2);
    CHECK(labeled.attrition.stages[4].output == 1);
    CHECK(labeled.data.labels[0] == 1);
}
