#include "qkinetic/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace qk::fft {
namespace {
std::mutex g_plan_mutex;  // FFTW planning is not thread-safe
}

void transform_axes(std::vector<cplx>& data, const std::vector<std::size_t>& shape,
                    const std::vector<std::size_t>& axes, int sign) {
    if (axes.empty() || data.empty()) return;
    const std::size_t rank = shape.size();
    std::vector<std::ptrdiff_t> stride(rank, 1);
    for (std::size_t d = rank; d-- > 1;) stride[d - 1] = stride[d] * static_cast<std::ptrdiff_t>(shape[d]);

    std::vector<bool> is_axis(rank, false);
    for (std::size_t a : axes) {
        if (a >= rank) throw std::invalid_argument("transform_axes: axis out of range");
        is_axis[a] = true;
    }
    std::vector<fftw_iodim> dims, loops;
    for (std::size_t d = 0; d < rank; ++d) {
        fftw_iodim io{static_cast<int>(shape[d]), static_cast<int>(stride[d]), static_cast<int>(stride[d])};
        (is_axis[d] ? dims : loops).push_back(io);
    }
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(g_plan_mutex);
        plan = fftw_plan_guru_dft(static_cast<int>(dims.size()), dims.data(), static_cast<int>(loops.size()),
                                  loops.data(), p, p, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    if (plan == nullptr) throw std::runtime_error("transform_axes: FFTW planning failed");
    fftw_execute_dft(plan, p, p);
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    fftw_destroy_plan(plan);
}

}  // namespace qk::fft
