// Calibration for the pixel measurement: fits the thickness constant by
// least squares on a seeded corpus, then reports the measurement error
// medians that the test tolerances are frozen from. Run once; the printed
// values are committed as constants.

#include <cmath>
#include <cstdio>
#include <vector>

#include "cfglyph/cfengine.hpp"
#include "cfglyph/glyphs.hpp"
#include "cfglyph/renderer.hpp"

int main() {
  using namespace cfglyph;

  GenConfig config;
  config.n = 1000;
  config.seed = 424242;
  config.params.thickness_calibration = 1.0;  // measure raw mean distances first
  const DatasetContainer data = generate_dataset(config);

  // c_t: least squares through the origin of true thickness on mean distance.
  double num = 0.0, den = 0.0;
  std::vector<double> mean_dist(data.size());
  for (std::size_t r = 0; r < data.size(); ++r) {
    const Measurement m = measure(data.images[r], config.params);
    mean_dist[r] = m.thickness;
    const double t = data.attrs_raw[r].at("t");
    num += t * mean_dist[r];
    den += mean_dist[r] * mean_dist[r];
  }
  const double c_t = num / den;
  std::printf("thickness_calibration = %.17g\n", c_t);

  std::vector<double> err_t, err_i, err_s;
  RenderParams fitted = config.params;
  fitted.thickness_calibration = c_t;
  for (std::size_t r = 0; r < data.size(); ++r) {
    const Measurement m = measure(data.images[r], fitted);
    err_t.push_back(std::abs(m.thickness - data.attrs_raw[r].at("t")));
    err_i.push_back(std::abs(m.intensity - data.attrs_raw[r].at("i")));
    err_s.push_back(std::abs(m.slant - data.attrs_raw[r].at("s")));
  }
  const double med_t = detail::median(err_t);
  const double med_i = detail::median(err_i);
  const double med_s = detail::median(err_s);
  std::printf("median |t_hat - t| = %.17g   (1.5x = %.17g)\n", med_t, 1.5 * med_t);
  std::printf("median |i_hat - i| = %.17g   (1.5x = %.17g)\n", med_i, 1.5 * med_i);
  std::printf("median |s_hat - s| = %.17g   (1.5x = %.17g)\n", med_s, 1.5 * med_s);

  // Spread diagnostics: the worst row of each kind.
  double max_t = 0, max_i = 0, max_s = 0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    max_t = std::max(max_t, err_t[r]);
    max_i = std::max(max_i, err_i[r]);
    max_s = std::max(max_s, err_s[r]);
  }
  std::printf("max errors: t %.4f  i %.4f  s %.4f\n", max_t, max_i, max_s);
  return 0;
}
