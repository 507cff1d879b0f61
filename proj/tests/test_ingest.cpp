#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "stgt/errors.hpp"
#include "stgt/ingest.hpp"

using namespace stgt;

namespace {

const char* kSchemaText =
    "id:txn_id\n"
    "timestamp:ts\n"
    "label:is_fraud\n"
    "continuous:amount\n"
    "categorical:merchant_category\n"
    "relation:device_id\n"
    "relation:ip_address\n";

const char* kCsvHeader = "txn_id,ts,is_fraud,amount,merchant_category,device_id,ip_address\n";

CsvSchema test_schema() { return parse_schema_text(kSchemaText, "schema"); }

TransactionRecord make_record(std::string id, int64_t ts, int label, double amount,
                              std::string device = "", std::string ip = "") {
    TransactionRecord rec;
    rec.txn_id = std::move(id);
    rec.timestamp = ts;
    rec.label = label;
    rec.continuous["amount"] = amount;
    if (!device.empty()) rec.relations["device_id"] = std::move(device);
    if (!ip.empty()) rec.relations["ip_address"] = std::move(ip);
    return rec;
}

// Canonical edge set keyed by transaction ids, independent of row order.
std::set<std::pair<std::string, std::string>> edge_ids(const MultiRelationGraph& graph,
                                                       const std::vector<TransactionRecord>& recs,
                                                       size_t relation) {
    std::set<std::pair<std::string, std::string>> edges;
    for (size_t i = 0; i < graph.adjacency[relation].size(); ++i) {
        for (int j : graph.adjacency[relation][i]) {
            auto a = recs[i].txn_id;
            auto b = recs[static_cast<size_t>(j)].txn_id;
            if (a > b) std::swap(a, b);
            edges.emplace(a, b);
        }
    }
    return edges;
}

} // namespace

TEST_CASE("schema parsing maps roles to columns") {
    CsvSchema schema = test_schema();
    CHECK(schema.id_column == "txn_id");
    CHECK(schema.timestamp_column == "ts");
    CHECK(schema.label_column == "is_fraud");
    CHECK(schema.continuous_fields == std::vector<std::string>{"amount"});
    CHECK(schema.categorical_fields == std::vector<std::string>{"merchant_category"});
    CHECK(schema.relation_fields == std::vector<std::string>{"device_id", "ip_address"});
}

TEST_CASE("schema parsing rejects bad input") {
    CHECK_THROWS_AS(parse_schema_text("continuous:amount\n", "s"), DataError);
    CHECK_THROWS_AS(parse_schema_text("id:a\nid:b\ntimestamp:t\nlabel:l\n", "s"), DataError);
    CHECK_THROWS_WITH_AS(parse_schema_text("id:a\ntimestamp:t\nlabel:l\nwidget:w\n", "s"),
                         doctest::Contains("unknown role"), DataError);
    CHECK_THROWS_AS(parse_schema_text("id:a\ntimestamp:t\nlabel:\n", "s"), DataError);
}

TEST_CASE("csv rows parse in file order") {
    std::string text = std::string(kCsvHeader) +
                       "t1,100,0,12.5,grocery,d1,ip1\n"
                       "t2,200,1,99.0,travel,d1,ip2\n"
                       "t3,300,,7.25,grocery,d2,ip1\n";
    auto records = parse_csv_text(text, test_schema(), "test.csv");
    REQUIRE(records.size() == 3);
    CHECK(records[0].txn_id == "t1");
    CHECK(records[1].txn_id == "t2");
    CHECK(records[2].txn_id == "t3");
    CHECK(records[0].timestamp == 100);
    CHECK(records[2].timestamp == 300);
    CHECK(records[0].label == 0);
    CHECK(records[1].label == 1);
    CHECK(records[2].label == kUnlabeled);
    CHECK(records[1].continuous.at("amount") == doctest::Approx(99.0));
    CHECK(records[0].categorical.at("merchant_category") == "grocery");
    CHECK(records[0].relations.at("device_id") == "d1");
    CHECK(records[2].relations.at("ip_address") == "ip1");
}

TEST_CASE("csv with only a header yields no records") {
    auto records = parse_csv_text(kCsvHeader, test_schema(), "test.csv");
    CHECK(records.empty());
}

TEST_CASE("csv errors name the physical line") {
    // Header is line 1, so the first data row is line 2.
    std::string bad_amount = std::string(kCsvHeader) + "t1,100,0,abc,grocery,d1,ip1\n";
    CHECK_THROWS_WITH_AS(parse_csv_text(bad_amount, test_schema(), "test.csv"),
                         doctest::Contains("line 2"), DataError);

    std::string bad_row3 = std::string(kCsvHeader) +
                           "t1,100,0,1.0,grocery,d1,ip1\n"
                           "t2,200,0,2.0,travel\n";
    CHECK_THROWS_WITH_AS(parse_csv_text(bad_row3, test_schema(), "test.csv"),
                         doctest::Contains("line 3"), DataError);

    std::string bad_label = std::string(kCsvHeader) + "t1,100,yes,1.0,grocery,d1,ip1\n";
    CHECK_THROWS_WITH_AS(parse_csv_text(bad_label, test_schema(), "test.csv"),
                         doctest::Contains("label"), DataError);

    std::string bad_ts = std::string(kCsvHeader) + "t1,later,0,1.0,grocery,d1,ip1\n";
    CHECK_THROWS_WITH_AS(parse_csv_text(bad_ts, test_schema(), "test.csv"),
                         doctest::Contains("timestamp"), DataError);

    std::string missing_col = "txn_id,ts,is_fraud,amount,merchant_category,device_id\n";
    CHECK_THROWS_WITH_AS(parse_csv_text(missing_col, test_schema(), "test.csv"),
                         doctest::Contains("ip_address"), DataError);
}

TEST_CASE("csv file round-trips through disk") {
    auto dir = std::filesystem::temp_directory_path() / "stgt_ingest_test";
    std::filesystem::create_directories(dir);
    auto path = (dir / "txns.csv").string();
    {
        std::ofstream out(path);
        out << kCsvHeader << "t1,100,1,5.0,retail,d9,ip9\n";
    }
    auto records = parse_csv(path, test_schema());
    REQUIRE(records.size() == 1);
    CHECK(records[0].txn_id == "t1");
    CHECK(records[0].label == 1);
    std::filesystem::remove_all(dir);

    CHECK_THROWS_AS(parse_csv((dir / "missing.csv").string(), test_schema()), DataError);
}

TEST_CASE("downsample keeps everything at ratio 1") {
    std::vector<TransactionRecord> records;
    for (int i = 0; i < 20; ++i) {
        records.push_back(make_record("t" + std::to_string(i), i, i % 4 == 0 ? 1 : 0, 1.0));
    }
    RngState rng(7);
    auto kept = downsample_legitimate(records, 1.0, rng);
    CHECK(kept == records);
}

TEST_CASE("downsample always keeps fraud and preserves order") {
    std::vector<TransactionRecord> records;
    for (int i = 0; i < 200; ++i) {
        records.push_back(make_record("t" + std::to_string(i), i, i % 10 == 0 ? 1 : 0, 1.0));
    }
    RngState rng(11);
    auto kept = downsample_legitimate(records, 1e-9, rng);
    // With a vanishing ratio only the fraud rows survive.
    REQUIRE(kept.size() == 20);
    for (size_t i = 0; i < kept.size(); ++i) {
        CHECK(kept[i].label == 1);
        CHECK(kept[i].txn_id == "t" + std::to_string(10 * i));
    }
}

TEST_CASE("downsample kept count tracks the binomial mean") {
    std::vector<TransactionRecord> records;
    for (int i = 0; i < 10000; ++i) {
        records.push_back(make_record("t" + std::to_string(i), i, 0, 1.0));
    }
    RngState rng(3);
    auto kept = downsample_legitimate(records, 0.5, rng);
    // Binomial(10000, 0.5): sd = 50, so a 3-sigma band is 5000 +/- 150.
    CHECK(kept.size() >= 4850);
    CHECK(kept.size() <= 5150);
}

TEST_CASE("downsample rejects out-of-range ratios") {
    std::vector<TransactionRecord> records{make_record("t0", 0, 0, 1.0)};
    RngState rng(1);
    CHECK_THROWS_AS(downsample_legitimate(records, 0.0, rng), ConfigError);
    CHECK_THROWS_AS(downsample_legitimate(records, 1.5, rng), ConfigError);
    CHECK_THROWS_AS(downsample_legitimate(records, -0.2, rng), ConfigError);
}

TEST_CASE("codec min-max scales continuous features") {
    std::vector<TransactionRecord> train{make_record("a", 0, 0, 0.0),
                                         make_record("b", 0, 0, 5.0),
                                         make_record("c", 0, 0, 10.0)};
    auto codec = FeatureCodec::fit(train);
    REQUIRE(codec.feature_dim() == 1);
    Matrix x = codec.encode(train);
    CHECK(x.at(0, 0) == doctest::Approx(0.0));
    CHECK(x.at(1, 0) == doctest::Approx(0.5));
    CHECK(x.at(2, 0) == doctest::Approx(1.0));
}

TEST_CASE("codec clamps out-of-range values from unseen rows") {
    std::vector<TransactionRecord> train{make_record("a", 0, 0, 0.0),
                                         make_record("b", 0, 0, 10.0)};
    auto codec = FeatureCodec::fit(train);
    std::vector<TransactionRecord> test{make_record("x", 0, 0, 20.0),
                                        make_record("y", 0, 0, -5.0)};
    Matrix x = codec.encode(test);
    CHECK(x.at(0, 0) == 1.0);
    CHECK(x.at(1, 0) == 0.0);
}

TEST_CASE("codec maps constant columns to zero") {
    std::vector<TransactionRecord> train{make_record("a", 0, 0, 7.0),
                                         make_record("b", 0, 0, 7.0)};
    auto codec = FeatureCodec::fit(train);
    Matrix x = codec.encode(train);
    CHECK(x.at(0, 0) == 0.0);
    CHECK(x.at(1, 0) == 0.0);
}

TEST_CASE("codec one-hot encodes categoricals with a sorted vocabulary") {
    std::vector<TransactionRecord> train(2);
    train[0].txn_id = "a";
    train[0].categorical["cat"] = "B";
    train[1].txn_id = "b";
    train[1].categorical["cat"] = "A";
    auto codec = FeatureCodec::fit(train);
    REQUIRE(codec.feature_dim() == 2);
    CHECK(codec.vocab("cat") == std::vector<std::string>{"A", "B"});

    Matrix x = codec.encode(train);
    // Row 0 holds "B" -> [0, 1]; row 1 holds "A" -> [1, 0].
    CHECK(x.at(0, 0) == 0.0);
    CHECK(x.at(0, 1) == 1.0);
    CHECK(x.at(1, 0) == 1.0);
    CHECK(x.at(1, 1) == 0.0);

    TransactionRecord unseen;
    unseen.txn_id = "c";
    unseen.categorical["cat"] = "C";
    Matrix xu = codec.encode({unseen});
    CHECK(xu.at(0, 0) == 0.0);
    CHECK(xu.at(0, 1) == 0.0);

    CHECK_THROWS_AS(codec.vocab("nope"), ConfigError);
}

TEST_CASE("codec fitted on train rows ignores test rows entirely") {
    std::vector<TransactionRecord> train{make_record("a", 0, 0, 0.0),
                                         make_record("b", 0, 0, 1.0)};
    std::vector<TransactionRecord> all = train;
    all.push_back(make_record("c", 0, 0, 100.0)); // test row with a huge value
    auto codec = FeatureCodec::fit(train);
    Matrix x = codec.encode(all);
    // The test row cannot stretch the fitted range; it just clamps.
    CHECK(x.at(0, 0) == doctest::Approx(0.0));
    CHECK(x.at(1, 0) == doctest::Approx(1.0));
    CHECK(x.at(2, 0) == 1.0);
}

TEST_CASE("shared entity values become edges per relation") {
    std::vector<TransactionRecord> records{make_record("t1", 0, 0, 1.0, "macA", "ip1"),
                                           make_record("t2", 1, 0, 1.0, "macB", "ip1")};
    auto graph = build_graph(records, {"ip_address", "device_id"});
    validate_graph(graph);
    CHECK(graph.edge_count(0) == 1); // shared ip
    CHECK(graph.edge_count(1) == 0); // different devices
    CHECK(graph.adjacency[0][0] == std::vector<int>{1});
    CHECK(graph.adjacency[0][1] == std::vector<int>{0});
}

TEST_CASE("single record graphs have no edges") {
    std::vector<TransactionRecord> records{make_record("t1", 0, 0, 1.0, "macA", "ip1")};
    auto graph = build_graph(records, {"ip_address", "device_id"});
    validate_graph(graph);
    CHECK(graph.node_count == 1);
    CHECK(graph.edge_count(0) == 0);
    CHECK(graph.edge_count(1) == 0);
}

TEST_CASE("empty entity values never form edges") {
    std::vector<TransactionRecord> records(2);
    records[0].txn_id = "t1";
    records[0].relations["device_id"] = "";
    records[1].txn_id = "t2";
    records[1].relations["device_id"] = "";
    auto graph = build_graph(records, {"device_id"});
    CHECK(graph.edge_count(0) == 0);
}

TEST_CASE("entities under the cap form full cliques") {
    std::vector<TransactionRecord> records;
    for (int i = 0; i < 6; ++i) {
        records.push_back(make_record("t" + std::to_string(i), i, 0, 1.0, "mac1"));
    }
    auto graph = build_graph(records, {"device_id"});
    validate_graph(graph);
    CHECK(graph.edge_count(0) == 15); // 6*5/2
    for (int i = 0; i < 6; ++i) {
        CHECK(graph.adjacency[0][static_cast<size_t>(i)].size() == 5);
    }
}

TEST_CASE("oversized entities are subsampled to the cap's clique size") {
    std::vector<TransactionRecord> records;
    for (int i = 0; i < 10; ++i) {
        records.push_back(make_record("t" + std::to_string(i), i, 0, 1.0, "mac1"));
    }
    GraphBuildOptions opts;
    opts.clique_cap = 4;
    auto graph = build_graph(records, {"device_id"}, opts);
    validate_graph(graph);
    CHECK(graph.edge_count(0) == 6); // 4*3/2 sampled pairs

    // Same seed, same records -> identical adjacency.
    auto again = build_graph(records, {"device_id"}, opts);
    CHECK(graph.adjacency == again.adjacency);

    // A different seed picks a different sample (overwhelmingly likely
    // among C(45,6) subsets).
    GraphBuildOptions other = opts;
    other.seed = 2;
    auto different = build_graph(records, {"device_id"}, other);
    CHECK(graph.adjacency != different.adjacency);
}

TEST_CASE("graph edges ignore input row order") {
    // Large groups force subsampling, the hard case for order independence.
    std::vector<TransactionRecord> records;
    RngState rng(99);
    for (int i = 0; i < 40; ++i) {
        records.push_back(make_record("t" + std::to_string(i), i, 0, 1.0,
                                      "mac" + std::to_string(rng.uniform_u64(3)),
                                      "ip" + std::to_string(rng.uniform_u64(4))));
    }
    GraphBuildOptions opts;
    opts.clique_cap = 5;

    auto graph = build_graph(records, {"device_id", "ip_address"}, opts);
    validate_graph(graph);

    // Rebuild from a shuffled copy of the same records.
    std::vector<TransactionRecord> shuffled = records;
    for (size_t i = shuffled.size(); i > 1; --i) {
        std::swap(shuffled[i - 1], shuffled[rng.uniform_u64(i)]);
    }
    auto graph2 = build_graph(shuffled, {"device_id", "ip_address"}, opts);
    validate_graph(graph2);

    for (size_t r = 0; r < 2; ++r) {
        CHECK(edge_ids(graph, records, r) == edge_ids(graph2, shuffled, r));
    }
}

TEST_CASE("split-aware build drops train-test edges") {
    std::vector<TransactionRecord> records;
    for (int i = 0; i < 4; ++i) {
        records.push_back(make_record("t" + std::to_string(i), i, 0, 1.0, "mac1"));
    }
    std::vector<uint8_t> train{1, 1, 0, 0}, test{0, 0, 1, 1};
    Matrix features(4, 1);
    auto ts = extract_timestamps(records);

    GraphBuildOptions opts;
    auto linked = build_graph(records, {"device_id"}, features, ts, train, test, opts);
    CHECK(linked.edge_count(0) == 6);

    opts.connect_across_split = false;
    auto split = build_graph(records, {"device_id"}, features, ts, train, test, opts);
    validate_graph(split);
    CHECK(split.edge_count(0) == 2); // 0-1 and 2-3 only
    CHECK(split.adjacency[0][0] == std::vector<int>{1});
    CHECK(split.adjacency[0][3] == std::vector<int>{2});

    CHECK(split.mask_indices(true) == std::vector<int>{0, 1});
    CHECK(split.mask_indices(false) == std::vector<int>{2, 3});
}

TEST_CASE("graph validation catches corrupted adjacency") {
    std::vector<TransactionRecord> records{make_record("t1", 0, 0, 1.0, "mac1"),
                                           make_record("t2", 1, 0, 1.0, "mac1")};
    auto graph = build_graph(records, {"device_id"});

    auto asymmetric = graph;
    asymmetric.adjacency[0][0].clear();
    CHECK_THROWS_AS(validate_graph(asymmetric), DataError);

    auto self_loop = graph;
    self_loop.adjacency[0][0] = {0, 1};
    CHECK_THROWS_AS(validate_graph(self_loop), DataError);

    auto out_of_range = graph;
    out_of_range.adjacency[0][0] = {5};
    CHECK_THROWS_AS(validate_graph(out_of_range), DataError);
}

TEST_CASE("graph summary reports counts per relation") {
    std::vector<TransactionRecord> records{make_record("t1", 0, 0, 1.0, "macA", "ip1"),
                                           make_record("t2", 1, 0, 1.0, "macA", "ip1"),
                                           make_record("t3", 2, 0, 1.0, "macB", "ip1")};
    std::vector<uint8_t> train{1, 1, 1}, test{0, 0, 0};
    Matrix features(3, 2);
    auto graph = build_graph(records, {"device_id", "ip_address"}, features,
                             extract_timestamps(records), train, test, {});
    auto summary = nlohmann::json::parse(graph_summary_json(graph));
    CHECK(summary["node_count"] == 3);
    CHECK(summary["feature_dim"] == 2);
    REQUIRE(summary["relations"].size() == 2);
    CHECK(summary["relations"][0]["name"] == "device_id");
    CHECK(summary["relations"][0]["edges"] == 1);
    CHECK(summary["relations"][1]["name"] == "ip_address");
    CHECK(summary["relations"][1]["edges"] == 3);
}
