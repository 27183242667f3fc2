#include "zipem/datasets.hpp"

namespace zipem {

namespace {

constexpr int kCorn[24][10] = {
    {0, 0, 0, 0, 0, 0, 0, 0, 0, 1}, {0, 0, 0, 0, 0, 0, 0, 0, 0, 1}, {0, 0, 0, 0, 0, 0, 0, 0, 0, 1},
    {0, 0, 0, 0, 0, 0, 0, 0, 1, 1}, {0, 0, 0, 0, 0, 0, 0, 0, 1, 1}, {0, 0, 0, 0, 0, 0, 0, 0, 1, 1},
    {0, 0, 0, 0, 0, 1, 0, 1, 2, 1}, {0, 0, 0, 0, 0, 1, 0, 1, 3, 1}, {0, 0, 0, 0, 0, 0, 0, 0, 0, 2},
    {0, 0, 0, 0, 0, 0, 0, 0, 0, 2}, {0, 0, 0, 0, 0, 0, 0, 0, 0, 2}, {0, 0, 0, 0, 0, 0, 0, 1, 0, 2},
    {0, 0, 0, 1, 1, 1, 0, 1, 0, 2}, {0, 0, 0, 0, 1, 2, 1, 1, 0, 2}, {0, 0, 0, 0, 1, 2, 1, 2, 1, 2},
    {0, 0, 0, 0, 2, 4, 1, 2, 3, 2}, {0, 0, 0, 0, 1, 4, 3, 2, 2, 3}, {0, 0, 0, 0, 1, 5, 4, 2, 3, 3},
    {0, 0, 0, 0, 0, 5, 4, 2, 3, 3}, {0, 0, 0, 0, 0, 5, 5, 2, 4, 3}, {0, 0, 0, 0, 0, 4, 5, 3, 4, 3},
    {0, 0, 0, 0, 0, 8, 6, 3, 6, 3}, {0, 0, 0, 0, 0, 8, 7, 4, 4, 3}, {0, 0, 0, 0, 0, 9, 7, 4, 4, 3},
};

constexpr std::string_view kCornCsv =
    "We1,We2,We3,We4,We5,We6,We7,We8,We9,Treat\n"
    "0,0,0,0,0,0,0,0,0,1\n"
    "0,0,0,0,0,0,0,0,0,1\n"
    "0,0,0,0,0,0,0,0,0,1\n"
    "0,0,0,0,0,0,0,0,1,1\n"
    "0,0,0,0,0,0,0,0,1,1\n"
    "0,0,0,0,0,0,0,0,1,1\n"
    "0,0,0,0,0,1,0,1,2,1\n"
    "0,0,0,0,0,1,0,1,3,1\n"
    "0,0,0,0,0,0,0,0,0,2\n"
    "0,0,0,0,0,0,0,0,0,2\n"
    "0,0,0,0,0,0,0,0,0,2\n"
    "0,0,0,0,0,0,0,1,0,2\n"
    "0,0,0,1,1,1,0,1,0,2\n"
    "0,0,0,0,1,2,1,1,0,2\n"
    "0,0,0,0,1,2,1,2,1,2\n"
    "0,0,0,0,2,4,1,2,3,2\n"
    "0,0,0,0,1,4,3,2,2,3\n"
    "0,0,0,0,1,5,4,2,3,3\n"
    "0,0,0,0,0,5,4,2,3,3\n"
    "0,0,0,0,0,5,5,2,4,3\n"
    "0,0,0,0,0,4,5,3,4,3\n"
    "0,0,0,0,0,8,6,3,6,3\n"
    "0,0,0,0,0,8,7,4,4,3\n"
    "0,0,0,0,0,9,7,4,4,3\n";

}  // namespace

std::string_view corn_wide_csv() { return kCornCsv; }

Eigen::MatrixXi corn_counts() {
  Eigen::MatrixXi y(24, 9);
  for (int i = 0; i < 24; ++i)
    for (int t = 0; t < 9; ++t) y(i, t) = kCorn[i][t];
  return y;
}

std::vector<long> corn_treatments() {
  std::vector<long> g;
  for (const auto& row : kCorn) g.push_back(row[9]);
  return g;
}

PanelData corn_panel(const TreatmentDesign& design) {
  return treatment_panel(corn_counts(), BoolGrid::Constant(24, 9, true), corn_treatments(), design);
}

}  // namespace zipem
