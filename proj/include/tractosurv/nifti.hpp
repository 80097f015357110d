#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tractosurv/volume.hpp"

namespace tractosurv {

// Low-level single-file NIfTI-1 access (348-byte header, magic "n+1\0",
// vox_offset 352). Values are returned unscaled; scl_slope/scl_inter are
// surfaced so callers decide whether scaling is legal for their kind.
struct NiftiData {
    int ndim = 0;
    std::array<int, 7> dims{1, 1, 1, 1, 1, 1, 1};
    std::array<double, 7> pixdim{1, 1, 1, 1, 1, 1, 1};
    Affine affine;          // voxel index -> world mm (sform if set, else qform)
    int16_t datatype = 0;
    double scl_slope = 0.0;
    double scl_inter = 0.0;
    std::vector<double> data; // x fastest, then y, z, t...
};

// Supported on-disk datatypes.
enum NiftiDatatype : int16_t {
    kNiftiUint8 = 2,
    kNiftiInt16 = 4,
    kNiftiInt32 = 8,
    kNiftiFloat32 = 16,
    kNiftiFloat64 = 64,
};

NiftiData read_nifti(const std::string& path);

void write_nifti(const std::string& path, int ndim, const std::array<int, 7>& dims,
                 const std::array<double, 7>& pixdim, const Affine& affine, int16_t datatype,
                 const std::vector<double>& data);

} // namespace tractosurv
