#include "fixtures.hpp"

namespace semstego::fixtures {

const std::vector<std::string>& memorization_secrets() {
  static const std::vector<std::string> secrets = {
      "the cat sat on the warm mat",          "rain falls softly over the quiet city",
      "a small boat drifts near the harbor",  "the old clock struck midnight again",
      "children laugh in the summer park",    "fresh bread smells great every morning",
      "stars shine bright above the desert",  "the train leaves at seven sharp",
      "green hills roll toward the distant sea", "she painted the door bright blue",
      "coffee keeps the engineers awake",     "wind carries leaves across the road",
      "the museum opens late on fridays",     "birds gather on the wire at dusk",
      "a quiet library hides many secrets",   "we planted tomatoes in the garden",
  };
  return secrets;
}

stegocore::Geometry desk_geometry() { return {3, 64, 64, 16}; }

std::unique_ptr<stegocore::StegoUnit> make_desk_unit(const std::vector<std::string>& secrets, std::uint64_t seed,
                                                     stegocore::Geometry geometry) {
  return stegocore::make_tiny_unit(secrets, geometry, seed);
}

}  // namespace semstego::fixtures
