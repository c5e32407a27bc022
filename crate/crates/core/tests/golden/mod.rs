//! Reference prompt texts with the example draw: volfrac 0.4, forcedist 0.65, rmin 4.0.

pub const FULL: &str = r#"Design a 2D beam structure.

Design requirements:
- Use a material volume fraction of 0.4
- Force distance parameter: 0.65
- Minimum filter radius (rmin): 4.0

Optimize the structure and simulate the result to obtain the compliance value.
"#;

pub const NATURAL: &str = r#"Design a 2D beam structure.

Design requirements:
- The design should be moderate material usage
- Apply a force distributed in the upper right region
Optimize the structure and simulate the result to obtain the compliance value.
"#;

pub const W_RAND: &str = r#"Execute a 2D topology optimization, simulate the result, and export the geometry as a 3D-printable STL file.

1. Optimization Configuration
   - Volume Fraction: 0.4
   - Force Distance: 0.65
   - Filter Radius (rmin): 4.0
   - Objective: Minimize compliance

2. Simulation
   - After optimization, simulate the design to obtain the compliance value

3. Post-processing & Export
   - Thresholding: Apply a 0.58 density threshold to convert the continuous density map into binary geometry
   - Mirror: Mirror the design across the y-axis for the final geometry
   - XY Scaling: Scale the X and Y dimensions by 2.47
   - Extrusion: Extrude the 2D result by 17.9 units in the Z-axis to create a 3D volume
   - Export: Save the final geometry as an STL file with these exact parameters
"#;

pub const W_DERIVED: &str = r#"Execute a 2D topology optimization, simulate the result, and export the geometry as a 3D-printable STL file.

1. Optimization Configuration
   - Volume Fraction: 0.4
   - Force Distance: 0.65
   - Filter Radius (rmin): 4.0
   - Objective: Minimize compliance

2. Simulation
   - After optimization, simulate the design to obtain the compliance value

3. Post-processing & Export
   The STL export parameters must be derived from the optimization inputs:
   - Thresholding: Use the volume fraction value as the density threshold
   - Mirror: Mirror the design across the y-axis only if the volume fraction is greater than 0.4
   - XY Scaling: Scale the X and Y dimensions by twice the filter radius
   - Extrusion: Extrude the 2D result in the Z-axis by the threshold value multiplied by 40
   - Export: Save the final geometry as an STL file with these derived parameters
"#;

pub const W_DISTRACT: &str = r#"Execute a 2D topology optimization, simulate the result, and export the geometry as a 3D-printable STL file.

1. Optimization Configuration
   - Volume Fraction: 0.4
   - Force Distance: 0.65
   - Filter Radius (rmin): 4.0
   - Objective: Minimize compliance

2. Simulation
   - After optimization, simulate the design to obtain the compliance value

3. Post-processing & Export
   - Threshold the density field at 0.42 to preview the design topology
   - Apply a 0.58 density threshold to produce the final solid/void geometry
   - Scale the preview display by 1.76x in XY for quick inspection
   - Scale the X and Y dimensions of the part by 2.47 for manufacturing
   - Mirror the design across the y-axis for the final geometry
   - Extrude the 2D result by 17.9 units in the Z-axis to create a 3D volume
   - Export: Save the final geometry as an STL file with these exact parameters
"#;

pub const W_COND: &str = r#"Execute a 2D topology optimization, simulate the result, then export the geometry as a 3D-printable STL file with parameters that depend on the simulation outcome.

1. Optimization Configuration
   - Volume Fraction: 0.4
   - Force Distance: 0.65
   - Filter Radius (rmin): 4.0
   - Objective: Minimize compliance

2. Simulation
   - After optimization, simulate the design to obtain the compliance value

3. Post-processing & Export (conditional on compliance)
   - If compliance > 254.8:
     - Thresholding: Apply a 0.48 density threshold to convert the continuous density map into binary geometry
     - Mirror: Mirror the design across the y-axis for the final geometry
   - If compliance <= 254.8:
     - Thresholding: Apply a 0.64 density threshold to convert the continuous density map into binary geometry
     - Mirror: Do NOT mirror the design for the final geometry
   - In both cases:
     - XY Scaling: Scale the X and Y dimensions by 0.92
     - Extrusion: Extrude the 2D result by 19.6 units in the Z-axis to create a 3D volume
   - Export: Save the final geometry as an STL file with these exact parameters
"#;

pub const W_MULTI: &str = r#"Execute a 2D topology optimization, simulate the result, and export the geometry as TWO separate 3D-printable STL files with different parameters.

1. Optimization Configuration
   - Volume Fraction: 0.4
   - Force Distance: 0.65
   - Filter Radius (rmin): 4.0
   - Objective: Minimize compliance

2. Simulation
   - After optimization, simulate the design to obtain the compliance value

3. Post-processing & Export

   Export A:
   - Thresholding: Apply a 0.48 density threshold to convert the continuous density map into binary geometry
   - Mirror: Mirror the design across the y-axis for the final geometry
   - XY Scaling: Scale the X and Y dimensions by 3.64
   - Extrusion: Extrude the 2D result by 19.6 units in the Z-axis to create a 3D volume
   - Export: Save the final geometry as an STL file with these exact parameters

   Export B:
   - Thresholding: Apply a 0.64 density threshold to convert the continuous density map into binary geometry
   - Mirror: Do NOT mirror the design for the final geometry
   - XY Scaling: Scale the X and Y dimensions by 0.92
   - Extrusion: Extrude the 2D result by 16.4 units in the Z-axis to create a 3D volume
   - Export: Save the final geometry as an STL file with these exact parameters
"#;

pub const HPC_EXPLICIT: &str = r#"Train a cGAN CNN 2D generative model for the Beams2D topology optimization problem on the Euler HPC cluster, then evaluate it against the dataset baseline using the standard EngiOpt evaluation script.

Step 1: Generate Training Script
   - Use the generate_training_command tool with:
     algorithm: cgan_cnn_2d
     problem_id: beams2d
     epochs: 100
     seed: 1

Step 2: Submit to HPC
   - Submit the generated SLURM script to the Euler cluster

Step 3: Monitor Training
   - Monitor the job until it completes
   - Use check_interval=30 and max_checks=200 for the monitoring

Step 4: Evaluate Trained Model
   - Use the evaluate_model tool to evaluate the trained model
     against the dataset baseline:
     problem_id: beams2d
     algorithm: cgan_cnn_2d
     seed: 1
     n_samples: 50
   - This downloads the model from WandB, generates designs, and
     computes metrics (IOG, COG, FOG, MMD, DPP, violation rate)
   - Report the evaluation metrics from the output

Complete all steps in order. Do not ask for clarification.
"#;

pub const HPC_NATURAL: &str = r#"Train a cGAN CNN 2D model for the Beams2D topology optimization problem on the Euler HPC cluster with seed 1 and 100 epochs. Use the available tools to generate the SLURM training script -- do not write or modify any scripts manually. Submit the job and wait for it to finish. Then use the model evaluation tool to evaluate the trained model against the dataset -- it will download the model from WandB automatically. Report the metrics.

Do not ask for clarification.
"#;

pub const RAG_P0: &str = r#"The EngiBench paper documents the default design conditions for the Beams2D problem in its API walkthrough.

Search the paper to find the default volume fraction (volfrac) listed for the Beams2D problem. Then generate a 2D beam design using exactly that volume fraction. Use default values for all other parameters (do NOT ask for clarification -- proceed directly with defaults).
"#;

pub const RAG_P1: &str = r#"In the EngiBench paper's Section 3.1 API walkthrough, a code example runs a Beams2D optimization using non-default design conditions. Search the paper to find both the volume fraction and force distance from that example, then generate a 2D beam design with those exact values. Use default values for all other parameters and do not ask for clarification.
"#;

pub const RAG_P2: &str = r#"The SOPTX paper by He et al. (2025) benchmarks its topology optimization framework on a 2D cantilever beam problem.

Search the paper to find both the volume fraction (volfrac) and the filter radius (rmin) used for that 2D cantilever benchmark. Then generate a 2D beam design using exactly those values. Use default values for all other parameters and do not ask for clarification.
"#;

pub const RAG_P3: &str = r#"Generate a 2D beam design combining parameters from multiple sources:

1. Use the volume fraction and force distance from the EngiBench paper's API walkthrough example (the non-default values shown in the code snippet).
2. Use the filter radius from the SOPTX paper by He et al. (2025) for their 2D cantilever beam benchmark.

Search the relevant papers to find each value, then generate a 2D beam design using exactly those three parameters. Use default values for all other parameters and do not ask for clarification.
"#;
