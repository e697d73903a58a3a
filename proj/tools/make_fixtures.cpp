// Writes the committed fixtures under <root>: the demonstration weight file
// and the regression input and golden outputs. Run only after the test suite
// passes, then commit the results.

#include <fstream>
#include <iostream>

#include "app/commands.hpp"

int main(int argc, char** argv) {
  using namespace klon;
  if (argc != 2) {
    std::cerr << "usage: klon_fixtures <repo root>\n";
    return 2;
  }
  const std::string root = argv[1];
  try {
    rnn::save_model_bank(rnn::make_demo_bank(), root + "/data/demo_weights.json");

    const auto input = analysis::guitar_like_signal(44100.0, 5.0, 2017);
    wav::write_file(root + "/tests/data/guitar_5s.wav", input, 44100, wav::Encoding::float32);

    const auto audio = wav::read_file(root + "/tests/data/guitar_5s.wav");
    const app::Resources res;
    for (const auto engine : {Engine::traditional, Engine::neural}) {
      PedalParams p;
      p.engine = engine;
      const auto bytes = app::render_wav(res, audio, p);
      const std::string path = root + "/tests/data/golden_" + std::string(to_string(engine)) + ".wav";
      std::ofstream(path, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                                  static_cast<std::streamsize>(bytes.size()));
      std::cout << "wrote " << path << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
