// Renders the bundled synthetic room sequences.
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "svo/dataset.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Render a synthetic room sequence", "make_synthetic"};
  std::string out;
  int frames = 30;
  bool still = false;
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--frames", frames, "Frame count")->check(CLI::Range(3, 10000));
  app.add_flag("--static", still, "Camera does not move");
  CLI11_PARSE(app, argc, argv);
  try {
    svo::write_room_dataset(out, svo::RoomScene{}, frames,
                            still ? svo::MotionKind::kStatic : svo::MotionKind::kSmooth);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
