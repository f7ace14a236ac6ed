#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "agem/dataset.hpp"
#include "synthetic.hpp"

using agem::Matrix;
using Catch::Matchers::WithinAbs;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           fs::path("agem_test_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int counter() {
    static int c = 0;
    return c++;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("citation loader parses a hand-built fixture") {
  TempDir dir;
  write_file(dir.file("toy.content"),
             "node_a\t1\t0\t1\tml\n"
             "node_b\t0\t1\t0\tdb\n"
             "node_c\t1\t1\t0\tml\n");
  write_file(dir.file("toy.cites"),
             "node_a\tnode_b\n"
             "node_b\tnode_c\n");
  const agem::Dataset ds =
      agem::load_citation_dataset(dir.file("toy.content"), dir.file("toy.cites"));

  REQUIRE(ds.n() == 3);
  REQUIRE(ds.features.cols() == 3);
  REQUIRE(ds.num_classes == 2);
  REQUIRE(ds.labels == std::vector<int>{0, 1, 0});
  REQUIRE(ds.name == "toy");
  REQUIRE(ds.dropped_edges == 0);

  Matrix expected_features(3, 3);
  expected_features << 0.5, 0, 0.5,
                       0, 1, 0,
                       0.5, 0.5, 0;
  REQUIRE((ds.features - expected_features).cwiseAbs().maxCoeff() < 1e-15);

  Matrix expected_adjacency = Matrix::Zero(3, 3);
  expected_adjacency(0, 1) = expected_adjacency(1, 0) = 1.0;
  expected_adjacency(1, 2) = expected_adjacency(2, 1) = 1.0;
  REQUIRE((*ds.adjacency - expected_adjacency).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("citation loader drops edges with unknown endpoints") {
  TempDir dir;
  write_file(dir.file("toy.content"), "a\t1\t0\tx\nb\t0\t1\ty\n");
  write_file(dir.file("toy.cites"), "a\tb\na\tghost\n");
  const agem::Dataset ds =
      agem::load_citation_dataset(dir.file("toy.content"), dir.file("toy.cites"));
  REQUIRE(ds.dropped_edges == 1);
  REQUIRE((*ds.adjacency)(0, 1) == 1.0);
}

TEST_CASE("citation loader reports malformed lines with their number") {
  TempDir dir;
  write_file(dir.file("bad.content"), "a\t1\t0\tx\nb\toops\n");
  write_file(dir.file("bad.cites"), "");
  try {
    agem::load_citation_dataset(dir.file("bad.content"), dir.file("bad.cites"));
    FAIL("expected DataError");
  } catch (const agem::DataError& e) {
    REQUIRE(std::string(e.what()).find(":2") != std::string::npos);
  }

  write_file(dir.file("arity.content"), "a\t1\t0\tx\nb\t1\t0\t0\ty\n");
  REQUIRE_THROWS_AS(
      agem::load_citation_dataset(dir.file("arity.content"), dir.file("bad.cites")),
      agem::DataError);

  write_file(dir.file("feat.content"), "a\t1\tnope\tx\n");
  REQUIRE_THROWS_AS(
      agem::load_citation_dataset(dir.file("feat.content"), dir.file("bad.cites")),
      agem::DataError);
}

TEST_CASE("feature csv loader parses and scales a hand fixture") {
  TempDir dir;
  write_file(dir.file("toy.csv"),
             "feat_0,feat_1,label\n"
             "0,5,0\n"
             "1,5,1\n"
             "2,5,0\n"
             "4,5,1\n");
  const agem::Dataset ds = agem::load_feature_dataset(dir.file("toy.csv"));
  REQUIRE(ds.n() == 4);
  REQUIRE(ds.num_classes == 2);
  REQUIRE_FALSE(ds.has_graph());
  REQUIRE(ds.labels == std::vector<int>{0, 1, 0, 1});

  Matrix expected(4, 2);
  expected << 0.0, 0.0,
              0.25, 0.0,
              0.5, 0.0,
              1.0, 0.0;  // constant column scales to zeros
  REQUIRE((ds.features - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("feature csv loader rejects bad input") {
  TempDir dir;
  write_file(dir.file("empty.csv"), "feat_0,feat_1,label\n");
  REQUIRE_THROWS_AS(agem::load_feature_dataset(dir.file("empty.csv")), agem::DataError);

  write_file(dir.file("ragged.csv"), "feat_0,feat_1,label\n1,2,0\n1,0\n");
  try {
    agem::load_feature_dataset(dir.file("ragged.csv"));
    FAIL("expected DataError");
  } catch (const agem::DataError& e) {
    REQUIRE(std::string(e.what()).find(":3") != std::string::npos);
  }

  write_file(dir.file("text.csv"), "feat_0,feat_1,label\n1,zzz,0\n");
  REQUIRE_THROWS_AS(agem::load_feature_dataset(dir.file("text.csv")), agem::DataError);

  write_file(dir.file("header.csv"), "a,b,c\n1,2,0\n");
  REQUIRE_THROWS_AS(agem::load_feature_dataset(dir.file("header.csv")), agem::DataError);

  REQUIRE_THROWS_AS(agem::load_feature_dataset(dir.file("missing.csv")), agem::DataError);
}

TEST_CASE("datasets round-trip through both formats") {
  TempDir dir;
  agem::Dataset ds = synth::make_graph_dataset(12, 5, 3, 4.0, 0.5, 0.1, 5);

  agem::write_citation_dataset(ds, dir.file("rt.content"), dir.file("rt.cites"));
  const agem::Dataset back = agem::load_citation_dataset(
      dir.file("rt.content"), dir.file("rt.cites"), /*normalize=*/false);
  REQUIRE(back.n() == ds.n());
  REQUIRE((back.features - ds.features).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE((*back.adjacency - *ds.adjacency).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(back.labels == ds.labels);

  agem::write_feature_dataset(ds, dir.file("rt.csv"));
  const agem::Dataset csv_back =
      agem::load_feature_dataset(dir.file("rt.csv"), /*normalize=*/false);
  REQUIRE((csv_back.features - ds.features).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE(csv_back.labels == ds.labels);
}

TEST_CASE("matrix csv round-trips exactly") {
  TempDir dir;
  const Matrix m = Matrix::Random(7, 4);
  agem::write_matrix_csv(m, dir.file("m.csv"));
  const Matrix back = agem::read_matrix_csv(dir.file("m.csv"));
  REQUIRE((m - back).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("csv loader tolerates crlf line endings") {
  TempDir dir;
  write_file(dir.file("crlf.csv"), "feat_0,feat_1,label\r\n1,2,0\r\n3,4,1\r\n");
  const agem::Dataset ds = agem::load_feature_dataset(dir.file("crlf.csv"));
  REQUIRE(ds.n() == 2);
  REQUIRE(ds.labels == std::vector<int>{0, 1});
}
