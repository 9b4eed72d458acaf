//! Frozen paired t-test fixtures: 20 vector pairs whose (t, p) values
//! were recorded with an independent high-precision statistics package
//! before the build.

pub type Fixture = (&'static [f64], &'static [f64], f64, f64);

pub const FIXTURES: &[Fixture] = &[
    (&[0.547143, 0.571529, 0.695597, 0.627484, 0.380772, 0.468398, 0.621067, 0.59329, 0.741643, 0.699356, 0.36627, 0.534948, 0.48555, 0.757772, 0.605532, 0.609544],
 &[0.465044, 0.498869, 0.672786, 0.614381, 0.484102, 0.482813, 0.584696, 0.555435, 0.779623, 0.734172, 0.258551, 0.518539, 0.648551, 0.721961, 0.576117, 0.611708],
 0.3632636305667993, 0.7214764477847487),
    (&[0.455861, 0.726878, 0.190544, 0.743438, 0.724394, 0.866799, 0.723385, 0.670697, 0.442033, 0.739739, 0.408511, 0.608655, 0.495441],
 &[0.477263, 0.820803, 0.108755, 0.664173, 0.787328, 0.91437, 0.659073, 0.665141, 0.636972, 0.620334, 0.543899, 0.549579, 0.559282],
 -0.6174446782093732, 0.5484792313766658),
    (&[0.610613, 0.497895, 0.201892, 0.407789, 0.653159, 0.797178, 0.649094, 0.449352],
 &[0.609664, 0.553524, 0.058744, 0.410691, 0.63087, 0.765135, 0.676767, 0.426751],
 0.8120085894965305, 0.4435193388906158),
    (&[0.105737, 0.513309, 0.665209, 0.684078, 0.425725, 0.550504, 0.909098, 0.482914, 0.914033, 0.754268, 0.337898, 0.88415, 0.564973, 0.212911],
 &[0.130356, 0.479221, 0.621824, 0.672528, 0.299338, 0.598482, 0.863545, 0.512437, 0.908954, 0.730843, 0.40151, 0.975373, 0.603176, 0.085678],
 0.5015009991340481, 0.6244035689541463),
    (&[0.592868, 0.689427, 0.758591, 0.543484, 0.493709, 0.59117, 0.578017, 0.513542, 0.637511, 0.836438, 0.618059, 0.731182, 0.699396, 0.925238, 0.485249, 0.693507, 0.41451, 0.467856, 0.862041, 0.335004, 0.555047, 0.553613, 0.526543, 0.327388],
 &[0.745995, 0.66821, 0.84145, 0.579399, 0.547451, 0.484609, 0.682428, 0.51819, 0.607783, 0.632927, 0.803883, 0.696105, 0.505057, 0.944032, 0.37687, 0.68254, 0.527394, 0.465459, 0.752626, 0.294268, 0.450031, 0.475736, 0.535844, 0.311798],
 0.6172406706026884, 0.543138950871302),
    (&[0.919862, 0.415467, 0.873726, 0.679653, 0.902818, 0.70364, 0.610683, 0.468313, 0.677498, 0.52031, 0.677526, 0.343216, 0.416993, 0.544809, 0.66422, 0.801077, 0.599817, 0.55249, 0.527996, 0.922995, 0.647767, 0.498126, 0.977732, 0.154001],
 &[0.980553, 0.431644, 0.770595, 0.714531, 0.877797, 0.601772, 0.642885, 0.363808, 0.59168, 0.637207, 0.910324, 0.295201, 0.506174, 0.52552, 0.647079, 0.768041, 0.662095, 0.644387, 0.42087, 0.972801, 0.342045, 0.391279, 0.870109, 0.252055],
 0.5231435283954722, 0.6058782821591526),
    (&[0.850329, 0.274965, 0.728887, 0.493865, 0.507301, 0.779285, 0.421018, 0.590828, 0.384511, 0.959075, 0.795481, 0.676181, 0.738138, 0.97026, 0.760681, 0.599896],
 &[0.803133, 0.08204, 0.801995, 0.592503, 0.430392, 0.778855, 0.301936, 0.600482, 0.230119, 0.968837, 0.85441, 0.621482, 0.735479, 1.001579, 0.890375, 0.526648],
 0.8596447086912915, 0.40351503059058713),
    (&[0.949056, 0.348718, 0.559856, 0.560676, 0.592374, 0.869104, 0.8518, 0.57969, 0.7197, 0.742471, 0.864671, 0.633723, 0.571408, 0.478453, 0.425244, 0.642697, 0.381395, 0.538932],
 &[0.934233, 0.349098, 0.522896, 0.609477, 0.562331, 0.924848, 0.737602, 0.670717, 0.683815, 0.701235, 0.938731, 0.674533, 0.657781, 0.499406, 0.404228, 0.566584, 0.328394, 0.463298],
 0.31585733837016516, 0.7559556472103696),
    (&[0.315276, 0.626825, 0.654792, 0.710882, 0.729711, 0.560857, 0.700469, 0.630666, 0.521746, 0.627518, 0.581576, 0.590172, 0.422487, 0.492271, 0.522972, 0.924584, 0.346157, 0.360139, 0.697569, 0.753381, 0.637658, 0.390371, 0.59432, 0.492212, 0.672205, 0.364117],
 &[0.35705, 0.551498, 0.695678, 0.705689, 0.629876, 0.595826, 0.591994, 0.761228, 0.637439, 0.778036, 0.549876, 0.574445, 0.532846, 0.498081, 0.460655, 0.900176, 0.383173, 0.436392, 0.739704, 0.740539, 0.427649, 0.444763, 0.610977, 0.492839, 0.660686, 0.260506],
 -0.22989539134808953, 0.8200437160801277),
    (&[0.881495, 0.687857, 0.275314, 0.328359, 0.76685, 0.678308, 0.40721, 0.482988, 0.782312, 0.370207, 0.756177, 0.695923],
 &[0.932503, 0.651469, 0.203433, 0.33011, 0.871436, 0.719914, 0.45068, 0.44662, 0.759928, 0.308288, 0.703689, 0.63023],
 0.5322615079508117, 0.6051289722199205),
    (&[0.629967, 0.491538, 0.944739, 0.662973, 0.307963, 0.57383, 0.805085, 0.69611, 0.567673, 0.871787, 0.829623, 0.692347, 0.743367, 0.971364, 0.164082, 0.547213, 0.887555, 0.439771],
 &[0.689822, 0.441807, 0.79525, 0.753347, 0.457958, 0.646892, 0.91146, 0.619413, 0.619766, 0.948502, 0.88703, 0.610779, 0.717101, 0.980052, 0.119845, 0.642906, 0.867742, 0.392152],
 -0.8035086750745022, 0.4327728550545876),
    (&[0.124385, 0.838738, 0.438849, 0.717194, 0.974812, 0.970142, 0.925545, 0.143956, 0.780326, 0.466819, 0.36004, 0.60228, 0.317673, 0.779252, 0.759655, 0.651804, 0.354105, 0.484213],
 &[0.126733, 0.807486, 0.293573, 0.735675, 1.040746, 0.926294, 0.817315, 0.144699, 0.813315, 0.580797, 0.290047, 0.516598, 0.185529, 0.710204, 0.87166, 0.711853, 0.291275, 0.34971],
 1.3675792310292245, 0.18925328140285583),
    (&[0.636007, 0.453665, 0.252152, 0.551378, 0.635177, 0.430001, 0.810283, 0.265269, 0.640076, 0.609411, 0.48635, 0.938097, 0.828785, 0.672642, 0.724515, 0.789389, 0.487816, 0.658877, 0.710407, 0.687924, 0.949224, 0.887261, 0.137638, 0.619551, 0.86502, 0.161773],
 &[0.582484, 0.50348, 0.069824, 0.557629, 0.413581, 0.468969, 0.816363, 0.142034, 0.748453, 0.680428, 0.530086, 0.953509, 0.819246, 0.715878, 0.788673, 0.773389, 0.49017, 0.724365, 0.617327, 0.690614, 1.015613, 1.067356, 0.166982, 0.747837, 0.83979, 0.125524],
 -0.3547633539505431, 0.7257421641797214),
    (&[0.801028, 0.440833, 0.882954, 0.811664, 0.53482, 0.406814, 0.315587, 0.697861, 0.640991, 0.655233, 0.484301, 0.569554, 0.522899, 0.611659, 0.350767, 0.864462, 0.681976, 0.780366, 0.642249, 0.568754, 0.53511, 0.570876, 0.734757, 0.457134, 0.503349],
 &[0.687709, 0.391746, 0.79212, 0.747269, 0.675092, 0.346994, 0.29671, 0.515351, 0.53011, 0.749029, 0.452534, 0.463018, 0.403459, 0.507426, 0.262053, 0.849406, 0.774405, 0.724865, 0.527005, 0.40345, 0.67868, 0.704721, 0.586375, 0.389976, 0.408652],
 2.5016068243438307, 0.019583991077399176),
    (&[0.315099, 0.666731, 0.559224, 0.513479, 0.821749, 0.435052, 0.816824, 0.619263, 0.580682, 0.436938, 0.596238, 0.672945, 0.787912, 0.866842, 0.477783, 0.607426, 0.540998, 0.426395, 0.503539, 0.456992, 0.722101, 0.728937, 0.323789, 0.617277, 0.406385, 0.814044, 0.319758, 0.535643],
 &[0.218949, 0.471773, 0.569414, 0.491086, 0.761169, 0.326587, 0.766592, 0.576372, 0.606174, 0.362219, 0.652076, 0.602493, 0.717006, 0.877791, 0.536624, 0.429287, 0.595975, 0.513945, 0.4882, 0.354324, 0.743279, 0.787834, 0.18229, 0.662017, 0.227443, 0.614967, 0.322541, 0.569898],
 2.5324336071280973, 0.017451039443378478),
    (&[0.672898, 0.48089, 0.460037, 0.72475, 0.613238, 0.527269, 0.684241, 1.074774, 1.047356, 0.542202, 1.046405, 1.068047, 0.782936, 0.709615, 0.520617, 0.852916, 0.820952, 0.692305, 0.505344, 0.572843, 0.816581, 0.352683, 0.680516, 0.566248, 0.645203, 0.349309, 0.523014, 1.156943, 0.43282],
 &[0.677287, 0.324181, 0.296659, 0.767432, 0.573815, 0.574813, 0.663688, 1.131055, 1.069088, 0.619304, 1.129768, 1.032743, 0.811074, 0.70157, 0.396383, 0.903111, 0.815455, 0.586408, 0.480558, 0.597478, 0.701765, 0.338025, 0.600722, 0.570585, 0.655485, 0.322909, 0.538548, 1.179833, 0.374097],
 1.3707308538565641, 0.18134775674265463),
    (&[0.747197, 0.714374, 0.655679, 0.473079, 0.695039, 0.741676, 0.663689, 0.322724, 0.562439, 0.652848, 0.557952, 0.654349, 0.413147, 0.580966, 0.595917, 0.380286, 0.589853, 0.216675, 0.56896, 0.095561, 0.555099, 0.313964, 0.070457],
 &[0.74165, 0.717728, 0.645872, 0.358865, 0.585499, 0.657325, 0.754024, 0.341629, 0.499933, 0.570063, 0.520051, 0.534969, 0.45422, 0.48805, 0.63893, 0.44348, 0.578833, 0.166189, 0.365143, 0.007668, 0.762732, 0.280747, 0.029772],
 1.6528427433021833, 0.11256420326848805),
    (&[0.308011, 0.437403, 0.840971, 1.016407, 0.685382, 0.39062, 0.413111, 1.010469, 0.651194, 0.313008, 0.398974, 0.535033, 0.655948, 0.427518, 0.883995, 0.579085, 0.312258, 0.252005, 0.025787, 0.584216, 0.506002, 0.362671],
 &[0.189562, 0.37382, 0.827245, 0.944718, 0.673135, 0.378284, 0.391187, 0.892857, 0.580544, 0.231686, 0.211863, 0.528752, 0.502104, 0.475802, 0.938868, 0.541891, 0.37415, 0.230529, 0.120514, 0.551755, 0.490398, 0.333359],
 2.4825191278478234, 0.021576975201695686),
    (&[0.744727, 0.464564, 0.53256, 1.043532, 0.775113, 0.502007, 0.422358, 0.362099, 0.738699],
 &[0.629955, 0.24941, 0.58956, 1.109571, 0.693636, 0.6193, 0.389964, 0.1709, 0.684177],
 1.3030322454547634, 0.22881548104487184),
    (&[0.518769, 0.508359, 0.284753, 0.448386, 0.886777, 0.401521, 0.344473, 0.553184, 0.568828, 0.300592, 0.430508, 0.430548, 0.471075, 0.365704, 0.590014, 0.431183, 0.404175, 0.728429, 0.940605, 0.467131, 0.958646, 0.540581, 0.165142, 0.759793, 0.943054, 0.688792],
 &[0.635843, 0.429708, 0.28588, 0.495831, 0.842818, 0.435565, 0.364519, 0.572881, 0.605774, 0.378942, 0.309419, 0.395067, 0.432632, 0.326673, 0.596113, 0.349585, 0.451941, 0.605682, 0.711738, 0.409476, 0.92542, 0.623107, 0.115127, 0.787949, 0.893221, 0.627599],
 1.3735972836216657, 0.1817599988308328),
];
